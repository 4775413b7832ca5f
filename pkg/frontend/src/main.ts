import { AnnotationApi } from "./api.js";
import { App } from "./app.js";

const base = new URLSearchParams(location.search).get("api") ?? "";
const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");
const app = new App(document, root, new AnnotationApi(base));
void app.start();
