import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    // model training and CLI round-trips are slower than unit tests
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
