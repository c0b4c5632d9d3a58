import { defineConfig } from "vitest/config";

export default defineConfig({
  build: {
    target: "es2022",
    sourcemap: true,
  },
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // the acceptance test boots the Python session service once per file
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
