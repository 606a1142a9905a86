import { defineConfig } from "vitest/config";

export default defineConfig({
  base: "./",
  build: { outDir: "dist", target: "es2020" },
  test: {
    environment: "happy-dom",
    include: ["tests/**/*.test.ts"],
  },
});
