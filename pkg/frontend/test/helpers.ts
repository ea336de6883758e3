import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { encodePgm } from "../src/formats.js";

export function tempDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

/** Deterministic 32-bit LCG so fixture frames need no numeric library. */
export function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (Math.imul(state, 1664525) + 1013904223) >>> 0;
    return state >>> 24; // top byte, 0..255
  };
}

/** Write `count` pseudo-random PGM frames into a fresh directory. */
export function writeFrames(seed: number, count = 3, width = 16, height = 16): string {
  const dir = tempDir(`frames-${seed}-`);
  const next = lcg(seed * 2654435761 + 1);
  for (let i = 0; i < count; i++) {
    const pixels = new Uint8Array(width * height);
    for (let j = 0; j < pixels.length; j++) pixels[j] = next();
    writeFileSync(join(dir, `frame_${String(i).padStart(3, "0")}.pgm`), encodePgm({ width, height, pixels }));
  }
  return dir;
}

/** Two identical flat frames: no brightness change, so no events. */
export function writeFlatFrames(): string {
  const dir = tempDir("flat-");
  const pixels = new Uint8Array(8 * 8).fill(100);
  for (const name of ["a.pgm", "b.pgm"]) {
    writeFileSync(join(dir, name), encodePgm({ width: 8, height: 8, pixels }));
  }
  return dir;
}
