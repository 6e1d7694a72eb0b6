import { ApiClient } from "./api";
import { Dashboard } from "./dashboard";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? `http://${window.location.hostname || "127.0.0.1"}:8000`;

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");
new Dashboard(root, new ApiClient(baseUrl)).mount();
