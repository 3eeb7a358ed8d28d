/**
 * Resolve the analysis server from the `?server=` query parameter.
 * Accepts a bare host:port, an http(s) origin, or a ws(s) URL; defaults
 * to the page's own origin. Yields both the websocket endpoint and the
 * HTTP base used for /profiles and audio fetches.
 */

export interface ServerEndpoints {
  wsUrl: string;
  httpBase: string;
}

export function resolveServer(
  serverParam: string | null,
  location: { protocol: string; host: string },
): ServerEndpoints {
  const secure = location.protocol === "https:";
  let raw = (serverParam ?? "").trim();
  if (raw === "") {
    raw = `${secure ? "wss" : "ws"}://${location.host}`;
  }
  let wsUrl: URL;
  if (/^wss?:\/\//i.test(raw)) {
    wsUrl = new URL(raw);
  } else if (/^https?:\/\//i.test(raw)) {
    wsUrl = new URL(raw);
    wsUrl.protocol = wsUrl.protocol === "https:" ? "wss:" : "ws:";
  } else {
    wsUrl = new URL(`${secure ? "wss" : "ws"}://${raw}`);
  }
  if (wsUrl.pathname === "/" || wsUrl.pathname === "") {
    wsUrl.pathname = "/ws";
  }
  const httpBase = new URL(wsUrl.toString());
  httpBase.protocol = wsUrl.protocol === "wss:" ? "https:" : "http:";
  httpBase.pathname = "";
  const base = httpBase.toString().replace(/\/$/, "");
  return { wsUrl: wsUrl.toString(), httpBase: base };
}
