import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    port: 5173,
    proxy: {
      // same-origin service paths during development
      "/scene": "http://127.0.0.1:8754",
      "/mesh": "http://127.0.0.1:8754",
      "/command": "http://127.0.0.1:8754",
      "/events": "http://127.0.0.1:8754",
      "/upload": "http://127.0.0.1:8754",
      "/health": "http://127.0.0.1:8754",
    },
  },
  test: {
    environment: "node",
    testTimeout: 30_000,
    hookTimeout: 120_000,
  },
});
