import { describe, expect, it } from "vitest";

import { resolveServer } from "../src/serverUrl";

const HTTP_PAGE = { protocol: "http:", host: "viewer.local:5173" };
const HTTPS_PAGE = { protocol: "https:", host: "viewer.example" };

describe("resolveServer", () => {
  it("defaults to the page origin", () => {
    expect(resolveServer(null, HTTP_PAGE)).toEqual({
      wsUrl: "ws://viewer.local:5173/ws",
      httpBase: "http://viewer.local:5173",
    });
    expect(resolveServer("", HTTPS_PAGE)).toEqual({
      wsUrl: "wss://viewer.example/ws",
      httpBase: "https://viewer.example",
    });
  });

  it("accepts a bare host:port", () => {
    expect(resolveServer("127.0.0.1:8700", HTTP_PAGE)).toEqual({
      wsUrl: "ws://127.0.0.1:8700/ws",
      httpBase: "http://127.0.0.1:8700",
    });
    // secure pages imply secure sockets
    expect(resolveServer("api.example:8700", HTTPS_PAGE).wsUrl).toBe("wss://api.example:8700/ws");
  });

  it("converts http(s) origins to websocket endpoints", () => {
    expect(resolveServer("http://localhost:8700", HTTP_PAGE)).toEqual({
      wsUrl: "ws://localhost:8700/ws",
      httpBase: "http://localhost:8700",
    });
    expect(resolveServer("https://api.example", HTTP_PAGE).wsUrl).toBe("wss://api.example/ws");
  });

  it("keeps an explicit ws URL and its path", () => {
    expect(resolveServer("ws://h:1/custom/ws", HTTP_PAGE).wsUrl).toBe("ws://h:1/custom/ws");
    expect(resolveServer("wss://h/ws", HTTP_PAGE).httpBase).toBe("https://h");
  });
});
