import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { runEvkit } from "../src/cli.js";
import { emulate, tie } from "../src/index.js";
import { encodeEvents, encodePpm } from "../src/formats.js";
import { tempDir, writeFrames } from "./helpers.js";

/**
 * Cross-interface equality: for 20 seeded cases, the wrapper's outputs
 * must be bit-identical to a direct CLI invocation on the same inputs,
 * and decoding plus re-encoding each artifact must reproduce the exact
 * file bytes.
 */
describe("20-case golden suite", () => {
  const cases = Array.from({ length: 20 }, (_, i) => i);

  it.each(cases)("case %i is bit-identical across interfaces", (seed) => {
    const frames = writeFrames(seed, 3, 16, 16);
    const wrapDir = tempDir(`golden-wrap-${seed}-`);
    const cliDir = tempDir(`golden-cli-${seed}-`);

    // wrapper path
    const eventsPath = join(wrapDir, "events.evst");
    const imagePath = join(wrapDir, "image.ppm");
    const result = emulate(frames, eventsPath, { seed: 100 + seed });
    const image = tie(eventsPath, imagePath, { variant: "tht", channels: 9 });

    // direct CLI path on the same inputs
    const cliEvents = join(cliDir, "events.evst");
    const cliImage = join(cliDir, "image.ppm");
    runEvkit(["emulate", frames, cliEvents, "--seed", String(100 + seed)]);
    runEvkit(["represent", cliEvents, cliImage, "--variant", "tht", "--channels", "9"]);

    const eventBytes = readFileSync(eventsPath);
    expect(eventBytes.equals(readFileSync(cliEvents))).toBe(true);
    const imageBytes = readFileSync(imagePath);
    expect(imageBytes.equals(readFileSync(cliImage))).toBe(true);

    // decode -> re-encode reproduces the exact bytes
    expect(encodeEvents(result.events).equals(eventBytes)).toBe(true);
    expect(encodePpm(image.image).equals(imageBytes)).toBe(true);
  });
});
