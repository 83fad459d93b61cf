import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import net from "node:net";
import os from "node:os";
import path from "node:path";

import type { RankedCandidate } from "../src/types.js";
import type { StorageLike } from "../src/session.js";

export class MemoryStorage implements StorageLike {
  private data = new Map<string, string>();
  getItem(key: string): string | null {
    return this.data.get(key) ?? null;
  }
  setItem(key: string, value: string): void {
    this.data.set(key, value);
  }
  removeItem(key: string): void {
    this.data.delete(key);
  }
}

export function candidates(...ids: [string, number][]): RankedCandidate[] {
  return ids.map(([candidate_id, score], index) => ({ candidate_id, score, rank: index + 1 }));
}

export async function waitFor(predicate: () => boolean, timeoutMs = 10000): Promise<void> {
  const start = Date.now();
  while (!predicate()) {
    if (Date.now() - start > timeoutMs) throw new Error("waitFor timed out");
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

export function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = net.createServer();
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address && typeof address === "object") {
        const port = address.port;
        server.close(() => resolve(port));
      } else {
        server.close(() => reject(new Error("no port assigned")));
      }
    });
  });
}

export interface EngineHandle {
  baseUrl: string;
  process: ChildProcess;
  stop(): Promise<void>;
}

/** Boot the Python engine (`caas serve`) on a free port with a fresh state dir. */
export async function startEngine(): Promise<EngineHandle> {
  const port = await freePort();
  const dataDir = mkdtempSync(path.join(os.tmpdir(), "console-engine-"));
  const child = spawn(
    "caas",
    ["--data-dir", dataDir, "--clock-mode", "virtual", "--listen", `127.0.0.1:${port}`, "serve"],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  let stderr = "";
  child.stderr?.on("data", (chunk) => (stderr += String(chunk)));

  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 30000;
  for (;;) {
    if (child.exitCode !== null) {
      throw new Error(`engine exited early (${child.exitCode}): ${stderr}`);
    }
    try {
      const response = await fetch(`${baseUrl}/v1/health`);
      if (response.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      child.kill("SIGKILL");
      throw new Error(`engine did not come up: ${stderr}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }

  return {
    baseUrl,
    process: child,
    stop: () =>
      new Promise<void>((resolve) => {
        child.once("exit", () => resolve());
        child.kill("SIGTERM");
        setTimeout(() => child.kill("SIGKILL"), 5000).unref();
      }),
  };
}
