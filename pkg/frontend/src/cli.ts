/**
 * Subprocess plumbing: every operation in this package shells out to the
 * `evkit` command-line tool and exchanges data through its file formats,
 * so results are bit-identical to direct CLI use by construction.
 */

import { spawnSync } from "node:child_process";

/** A CLI invocation that exited non-zero; carries the core error text. */
export class EvkitError extends Error {
  constructor(
    message: string,
    public readonly exitCode: number,
    public readonly stderr: string
  ) {
    super(message);
  }
}

function command(): { bin: string; prefix: string[] } {
  const override = process.env.EVKIT_COMMAND;
  if (override) {
    const parts = override.split(" ");
    return { bin: parts[0], prefix: parts.slice(1) };
  }
  return { bin: "python3", prefix: ["-m", "evkit"] };
}

export interface RunResult {
  stdout: string;
  stderr: string;
}

export function runEvkit(args: string[]): RunResult {
  const { bin, prefix } = command();
  const proc = spawnSync(bin, [...prefix, ...args], { encoding: "utf-8" });
  if (proc.error) throw proc.error;
  if (proc.status !== 0) {
    const detail = (proc.stderr ?? "").trim().split("\n").pop() ?? "";
    throw new EvkitError(
      `evkit ${args[0]} failed (exit ${proc.status}): ${detail}`,
      proc.status ?? -1,
      proc.stderr ?? ""
    );
  }
  return { stdout: proc.stdout, stderr: proc.stderr };
}

export function runEvkitJson<T = Record<string, unknown>>(args: string[]): T {
  const { stdout } = runEvkit(args);
  return JSON.parse(stdout) as T;
}
