/** Scripted end-to-end session against a live labeling service: a 60-record
 * fixture pool is labeled through the UI's own client/driver code, the queue
 * must drain in batches of at most 4 with the iteration advancing, and the
 * final export must byte-match the simulated-oracle run of the same pool
 * given the same label choices. Requires the Python package (spawned via
 * python3). */
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join, resolve } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, type LabelValue } from "../src/api.js";
import { labelUntilComplete } from "../src/driver.js";

const repoRoot = resolve(dirname(fileURLToPath(import.meta.url)), "..", "..");
const pythonOk =
  spawnSync("python3", ["-c", "import reviewguard"], { cwd: repoRoot }).status === 0;

const describeE2E = pythonOk ? describe : describe.skip;

describeE2E("end-to-end labeling session", () => {
  let workdir: string;
  let server: ChildProcess;
  let base: string;
  let truth: Map<string, LabelValue>;

  beforeAll(async () => {
    workdir = mkdtempSync(join(tmpdir(), "labeler-e2e-"));
    const fixtures = spawnSync(
      "python3",
      ["scripts/make_fixtures.py", "--out-dir", workdir,
       "--n-seed", "120", "--n-pool", "60", "--noise", "0.5", "--seed", "0"],
      { cwd: repoRoot, encoding: "utf-8" },
    );
    expect(fixtures.status, fixtures.stderr).toBe(0);

    truth = new Map();
    for (const line of readFileSync(join(workdir, "truth.jsonl"), "utf-8").split("\n")) {
      if (!line.trim()) continue;
      const record = JSON.parse(line);
      truth.set(record.id, record.label);
    }
    expect(truth.size).toBe(60);

    server = spawn("python3", ["-m", "reviewguard.cli", "serve", "--port", "0"], {
      cwd: repoRoot,
      env: { ...process.env, PYTHONUNBUFFERED: "1" },
    });
    base = await new Promise<string>((resolvePort, reject) => {
      const timer = setTimeout(() => reject(new Error("service did not start")), 20_000);
      server.stdout!.on("data", (chunk: Buffer) => {
        const match = chunk.toString().match(/listening on (http:\/\/[\d.:]+)/);
        if (match) {
          clearTimeout(timer);
          resolvePort(match[1]);
        }
      });
      server.on("exit", (code) => reject(new Error(`service exited early: ${code}`)));
    });
  }, 30_000);

  afterAll(() => {
    server?.kill();
  });

  it("labels every queued item and exports the oracle-equivalent corpus", async () => {
    const api = new ApiClient(base);

    const created = await api.startSession({
      seed_corpus: join(workdir, "seed.jsonl"),
      pool_corpus: join(workdir, "pool.jsonl"),
      seed: 0,
      svm_epochs: 10,
    });
    expect(created.ok, JSON.stringify(created)).toBe(true);

    const iterations: number[] = [];
    const batchSizes: number[] = [];
    const final = await labelUntilComplete(
      api,
      (item) => {
        const label = truth.get(item.record_id);
        expect(label, `no truth for ${item.record_id}`).toBeDefined();
        return label!;
      },
      {
        timeoutMs: 180_000,
        onIteration: (view, batchSize) => {
          iterations.push(view.iteration);
          batchSizes.push(batchSize);
        },
      },
    );

    expect(final.state).toBe("complete");
    expect(final.counts.pool_remaining).toBe(0);
    expect(final.counts.auto + final.counts.expert).toBe(60);
    // every expert batch respects the per-iteration cap and the loop advances
    expect(batchSizes.length).toBeGreaterThan(0);
    for (const size of batchSizes) expect(size).toBeLessThanOrEqual(4);
    for (let i = 1; i < iterations.length; i++) {
      expect(iterations[i]).toBeGreaterThan(iterations[i - 1]);
    }

    const exported = await api.exportText();
    expect(exported.ok).toBe(true);

    // identical label choices through the simulated oracle must export identically
    const offline = join(workdir, "offline.jsonl");
    const run = spawnSync(
      "python3",
      ["-m", "reviewguard.cli", "--seed", "0", "label",
       "--seed-corpus", join(workdir, "seed.jsonl"),
       "--pool", join(workdir, "pool.jsonl"),
       "--truth", join(workdir, "truth.jsonl"),
       "--out", offline],
      { cwd: repoRoot, encoding: "utf-8" },
    );
    expect(run.status, run.stderr).toBe(0);
    if (exported.ok) {
      expect(exported.value).toBe(readFileSync(offline, "utf-8"));
    }
  }, 240_000);
});
