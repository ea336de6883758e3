/**
 * High-level entry points: load event files, emulate events from frame
 * directories, and compute temporal-image representations. Compute runs
 * in the `evkit` CLI; this layer decodes the artifacts it writes.
 */

import { readFileSync } from "node:fs";

import { runEvkitJson } from "./cli.js";
import {
  decodeEvents,
  decodePpm,
  decodeTensor,
  EventArrays,
  PnmImage,
  Tensor,
} from "./formats.js";

export * from "./formats.js";
export { EvkitError, runEvkit, runEvkitJson } from "./cli.js";

export function loadEvents(path: string): EventArrays {
  return decodeEvents(readFileSync(path));
}

export interface EmulateOptions {
  threshold?: number;
  sigma?: number;
  timestampResolution?: number;
  cutoffHz?: number;
  frameIntervalUs?: number;
  seed?: number;
}

export interface EmulateResult {
  count: number;
  eventsPath: string;
  events: EventArrays;
}

/** Convert a directory of PGM frames into an event file and decode it. */
export function emulate(
  framesDir: string,
  outPath: string,
  options: EmulateOptions = {}
): EmulateResult {
  const args = ["emulate", framesDir, outPath];
  if (options.threshold !== undefined) args.push("--threshold", String(options.threshold));
  if (options.sigma !== undefined) args.push("--sigma", String(options.sigma));
  if (options.timestampResolution !== undefined)
    args.push("--timestamp-resolution", String(options.timestampResolution));
  if (options.cutoffHz !== undefined) args.push("--cutoff-hz", String(options.cutoffHz));
  if (options.frameIntervalUs !== undefined)
    args.push("--frame-interval-us", String(options.frameIntervalUs));
  if (options.seed !== undefined) args.push("--seed", String(options.seed));
  const payload = runEvkitJson<{ events: string; count: number }>(args);
  return { count: payload.count, eventsPath: payload.events, events: loadEvents(outPath) };
}

export interface TieOptions {
  variant?: "tt" | "tth" | "tht" | "thh";
  channels?: number;
  /** Also dump the raw channel tensor to this path and decode it. */
  tensorPath?: string;
}

export interface TieResult {
  image: PnmImage;
  zLo: number;
  zHi: number;
  degenerate: boolean;
  tensor?: Tensor;
}

/** Render an event file into a percentile-normalized 3-channel image. */
export function tie(eventsPath: string, outPath: string, options: TieOptions = {}): TieResult {
  const args = ["represent", eventsPath, outPath];
  if (options.variant !== undefined) args.push("--variant", options.variant);
  if (options.channels !== undefined) args.push("--channels", String(options.channels));
  if (options.tensorPath !== undefined) args.push("--dump-tensor", options.tensorPath);
  const payload = runEvkitJson<{ z_lo: number; z_hi: number; degenerate: boolean }>(args);
  const result: TieResult = {
    image: decodePpm(readFileSync(outPath)),
    zLo: payload.z_lo,
    zHi: payload.z_hi,
    degenerate: payload.degenerate,
  };
  if (options.tensorPath !== undefined) {
    result.tensor = decodeTensor(readFileSync(options.tensorPath));
  }
  return result;
}

/** Format-sniffed summary of any artifact file, as the CLI reports it. */
export function info(path: string): Record<string, unknown> {
  return runEvkitJson(["info", path]);
}
