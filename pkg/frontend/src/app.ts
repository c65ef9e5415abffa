import { ApiClient } from "./api.js";
import { MetricsScreen } from "./metrics.js";
import { RunDetailScreen } from "./runDetail.js";
import { RunListScreen } from "./runList.js";

// Hash router: #/runs (default), #/runs/<id>, #/metrics.
export function startApp(root: HTMLElement): void {
  const api = new ApiClient({
    token: localStorage.getItem("cadloop-token"),
    onTokenChange: (token) => {
      if (token) localStorage.setItem("cadloop-token", token);
      else localStorage.removeItem("cadloop-token");
    },
  });
  let active: { stopPolling?: () => void } | null = null;

  const navigate = (hash: string) => {
    location.hash = hash;
  };

  const route = () => {
    active?.stopPolling?.();
    root.textContent = "";
    const hash = location.hash || "#/runs";
    const detail = hash.match(/^#\/runs\/(.+)$/);
    if (detail) {
      const screen = new RunDetailScreen(root, api, decodeURIComponent(detail[1]));
      active = screen;
      void screen.load().then(() => screen.startPolling());
    } else if (hash === "#/metrics") {
      const screen = new MetricsScreen(root, api);
      active = screen as { stopPolling?: () => void };
      void screen.load();
    } else {
      const screen = new RunListScreen(root, api, (runId) =>
        navigate(`#/runs/${encodeURIComponent(runId)}`),
      );
      active = screen;
      screen.startPolling();
    }
  };

  window.addEventListener("hashchange", route);
  route();
}

const rootElement = document.getElementById("app");
if (rootElement) startApp(rootElement);
