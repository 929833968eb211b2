import { defineConfig } from "vitest/config";

// base "./" keeps the bundle relocatable: the api-service mounts dist/ under
// /ui, and any static host works too.
export default defineConfig({
  base: "./",
  build: { outDir: "dist" },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
  },
});
