// Browser entry point.

import { App } from "./app.js";

const base = (window as unknown as { STARDOM_API?: string }).STARDOM_API ?? "http://127.0.0.1:8321";
const app = new App(base);
document.body.append(app.element);
