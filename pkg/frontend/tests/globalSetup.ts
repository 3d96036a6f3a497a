// Spawns the mock-backed engine service once for the whole UI test run and
// writes its connection metadata where tests can read it synchronously.

import { spawn, type ChildProcess } from "node:child_process";
import { rmSync, writeFileSync } from "node:fs";
import { get } from "node:http";
import { tmpdir } from "node:os";
import { join } from "node:path";

export const META_PATH = join(tmpdir(), "docforager-ui-test-meta.json");

let server: ChildProcess | null = null;
let dataDir: string | null = null;

function probeOnce(url: string): Promise<boolean> {
  // Plain keep-alive-free HTTP: lingering sockets here would hold the vitest
  // main process open at shutdown.
  return new Promise((resolve) => {
    const request = get(url, { agent: false }, (response) => {
      response.resume();
      resolve(response.statusCode === 200);
    });
    request.on("error", () => resolve(false));
  });
}

async function waitUntilReady(baseUrl: string, timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!(await probeOnce(`${baseUrl}/collections`))) {
    if (Date.now() > deadline) throw new Error(`service at ${baseUrl} never became ready`);
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
}

export async function setup(): Promise<void> {
  server = spawn("python3", [join(import.meta.dirname, "..", "scripts", "serve_mock.py")], {
    stdio: ["ignore", "pipe", "inherit"],
  });
  const meta: string = await new Promise((resolve, reject) => {
    let buffer = "";
    server!.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const newline = buffer.indexOf("\n");
      if (newline >= 0) resolve(buffer.slice(0, newline));
    });
    server!.on("exit", (code) => reject(new Error(`service exited early (${code})`)));
    setTimeout(() => reject(new Error("service produced no metadata")), 20000).unref();
  });
  const parsed = JSON.parse(meta);
  dataDir = parsed.data_dir;
  writeFileSync(META_PATH, meta);
  // Nothing else is read from the child; drop its handles so they cannot
  // keep the vitest main process alive at shutdown.
  server.stdout!.destroy();
  server.unref();
  await waitUntilReady(parsed.base_url);
}

export async function teardown(): Promise<void> {
  if (server) {
    server.stdout?.destroy();
    server.kill("SIGKILL");
  }
  if (dataDir) rmSync(dataDir, { recursive: true, force: true });
}
