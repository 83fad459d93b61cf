import { mountConsole } from "./app.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("engine") ?? "http://127.0.0.1:8470";

mountConsole(document.getElementById("app")!, baseUrl);
