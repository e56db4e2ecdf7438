import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    environment: "node",
    // the integration suite spawns a live server process
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
