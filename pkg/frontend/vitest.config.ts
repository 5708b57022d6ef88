import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // conformance tests spawn the Python session service
    testTimeout: 120_000,
    hookTimeout: 60_000,
  },
});
