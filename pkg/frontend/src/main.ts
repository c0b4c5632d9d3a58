import { startApp } from "./app";

const DEFAULT_SERVER = "ws://127.0.0.1:8642";

const params = new URLSearchParams(window.location.search);
startApp(params.get("server") ?? DEFAULT_SERVER);
