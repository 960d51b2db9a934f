import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import { MockBackend } from "../src/backend.js";
import { siteHash, siteHex } from "../src/hash.js";
import { PlanError, parsePlan } from "../src/plan.js";
import {
  SCHEDULE,
  ScheduleOp,
  analyticPeak,
  runReplayer,
  siteFrames,
} from "../src/replayer.js";
import { ShimConfig, ShimRuntime } from "../src/shim.js";

let workDir: string;

beforeAll(() => {
  workDir = mkdtempSync(join(tmpdir(), "hmpt-shim-"));
});

function planFile(name: string, fastSites: number[], pool = 1): string {
  const assignments: Record<string, number> = {};
  for (const site of fastSites) {
    assignments[siteHex(siteHash(siteFrames(site)))] = pool;
  }
  const path = join(workDir, name);
  writeFileSync(path, JSON.stringify({
    version: 1,
    default_pool: 0,
    assignments,
  }));
  return path;
}

function makeShim(name: string, fastSites: number[] | null):
    { shim: ShimRuntime; backend: MockBackend; tracePath: string } {
  const tracePath = join(workDir, `${name}.trace`);
  const config: ShimConfig = {
    plan: fastSites === null
      ? null
      : parsePlan(readFileSync(planFile(`${name}.plan.json`, fastSites), "utf8")),
    tracePath,
    defaultPool: 0,
  };
  const backend = new MockBackend();
  return { shim: new ShimRuntime(config, backend), backend, tracePath };
}

/** Parse traces with the analysis toolchain (its CLI is the contract). */
function analyzeTrace(path: string): { footprint_bytes: number; groups: unknown[] } {
  const out = execFileSync(
    "python3",
    ["-m", "hmpt.cli", "analyze", path, "--format", "json",
     "--size-threshold", "0", "--top-k", "9"],
    { encoding: "utf8" },
  );
  return JSON.parse(out);
}

describe("site hashing", () => {
  it("matches the analysis toolchain bit for bit", () => {
    expect(siteHash([])).toBe(0xcbf29ce484222325n);
    expect(siteHash(["replayer.ts:alloc_site_0"])).toBe(0x8107743613aa2046n);
    expect(siteHash(["kernel+0x1a2", "main+0x40"])).toBe(0x52ee3ab44bf96b07n);
    expect(siteHash(["fn_é+0x10"])).toBe(0x34c38185e30e6b18n);
  });

  it("is a pure function of the frame list", () => {
    expect(siteHash(["a", "b"])).toBe(siteHash(["a", "b"]));
    expect(siteHash(["a", "b"])).not.toBe(siteHash(["ab"]));
    expect(siteHex(0x1n)).toBe("0000000000000001");
  });
});

describe("plan files", () => {
  it("rejects wrong versions and malformed entries", () => {
    expect(() => parsePlan('{"version": 2, "assignments": {}}')).toThrow(PlanError);
    expect(() => parsePlan('{"version": 1, "assignments": {"zz": 1}}')).toThrow(PlanError);
    expect(() => parsePlan("not json")).toThrow(PlanError);
  });

  it("parses assignments into site ids", () => {
    const plan = parsePlan(
      '{"version": 1, "default_pool": 2, "assignments": {"00000000000000ff": 1}}');
    expect(plan.defaultPool).toBe(2);
    expect(plan.assignments.get(0xffn)).toBe(1);
  });
});

describe("plan-driven routing", () => {
  const FAST_SITES = [1, 3, 5, 7];

  it("tags every allocation with its planned pool", () => {
    const { shim, backend } = makeShim("routing", FAST_SITES);
    const result = runReplayer(shim);
    shim.close();

    const fast = new Set(FAST_SITES);
    const expected = result.allocSites.map((site) => (fast.has(site) ? 1 : 0));
    expect(backend.tags).toEqual(expected); // 100% of allocations
    expect(backend.tags.filter((t) => t === 1).length).toBeGreaterThan(0);

    // live blocks answer the tag query with their planned pool
    const leaked = result.addresses.get("first_9")!;
    expect(backend.tagOf(leaked)).toBe(0);
  });

  it("routes unplanned sites to the default pool", () => {
    const { shim, backend } = makeShim("unplanned", [2]);
    shim.intercept_alloc(64, siteFrames(8));
    expect(backend.tags).toEqual([0]);
    shim.close();
  });

  it("falls back to the default pool when the planned pool fails", () => {
    const tracePath = join(workDir, "fallback.trace");
    const config: ShimConfig = {
      plan: parsePlan(readFileSync(planFile("fallback.plan.json", [0]), "utf8")),
      tracePath,
      defaultPool: 0,
    };
    const backend = new MockBackend(new Set([1]));
    const shim = new ShimRuntime(config, backend);
    const addr = shim.intercept_alloc(128, siteFrames(0));
    shim.close();
    expect(backend.tagOf(addr)).toBe(0);
    expect(readFileSync(tracePath, "utf8")).toContain("# warn: pool 1 failed");
  });
});

describe("record-only mode", () => {
  it("is behaviorally inert versus running without the shim", () => {
    const { shim, backend } = makeShim("record-only", null);
    const result = runReplayer(shim);
    shim.close();

    // bare backend run with the same request sequence, no shim in between
    const bare = new MockBackend();
    const bareAddrs: bigint[] = [];
    const byKey = new Map<string, bigint>();
    for (const op of SCHEDULE) {
      if (op.op === "alloc") {
        const addr = bare.alloc(op.size, 0);
        byKey.set(op.key, addr);
        bareAddrs.push(addr);
      } else {
        bare.free(byKey.get(op.key)!);
      }
    }

    expect(backend.tags).toEqual(bare.tags); // tag-for-tag identical
    const shimAddrs = SCHEDULE.filter((op) => op.op === "alloc")
      .map((op) => result.addresses.get((op as { key: string }).key)!);
    expect(shimAddrs).toEqual(bareAddrs);
    expect(backend.tags.every((t) => t === 0)).toBe(true);
  });
});

describe("trace output", () => {
  it("is accepted by the analysis CLI and reproduces the analytic peak", () => {
    const { shim, tracePath } = makeShim("full", [1, 3, 5, 7]);
    runReplayer(shim);
    shim.close();

    const report = analyzeTrace(tracePath);
    expect(report.footprint_bytes).toBe(analyticPeak());
    expect(report.footprint_bytes).toBe(85_000);
    expect(report.groups.length).toBe(10);
  });

  it("matches allocations and frees record for record", () => {
    const { shim, tracePath } = makeShim("counts", null);
    runReplayer(shim);
    shim.intercept_free(0xdead_beefn); // foreign: passthrough, no record
    shim.close();

    const lines = readFileSync(tracePath, "utf8").trim().split("\n");
    const kinds = new Map<string, number>();
    for (const line of lines) {
      const kind = line[0]!;
      kinds.set(kind, (kinds.get(kind) ?? 0) + 1);
    }
    const allocs = SCHEDULE.filter((op) => op.op === "alloc").length;
    const frees = SCHEDULE.filter((op) => op.op === "free").length;
    expect(kinds.get("A")).toBe(allocs);
    expect(kinds.get("F")).toBe(frees);
    expect(kinds.get("K")).toBe(10 * 2); // two frames per site, first sight only
  });

  it("emits stable site ids across runs", () => {
    const runs: string[][] = [];
    for (const name of ["stable1", "stable2"]) {
      const { shim, tracePath } = makeShim(name, null);
      runReplayer(shim);
      shim.close();
      runs.push(readFileSync(tracePath, "utf8").split("\n")
        .filter((line) => line.startsWith("K ")).sort());
    }
    expect(runs[0]).toEqual(runs[1]);
  });

  it("replays a plan produced by the planning CLI at the expected byte split", () => {
    // three-site workload shaped like the bundled multi-grid campaign
    const sites = [
      { frames: ["mg_kernel+0x1000", "main+0x2c"], bytes: 9_208_080_000 },
      { frames: ["mg_kernel+0x1040", "main+0x2c"], bytes: 9_208_080_000 },
      { frames: ["mg_kernel+0x1080", "main+0x2c"], bytes: 8_043_840_000 },
    ];
    const tracePath = join(workDir, "mg.trace");
    const planPath = join(workDir, "mg.plan.json");
    execFileSync("python3", ["-c",
      "import sys; from hmpt import synthdata; " +
      "open(sys.argv[1], 'w').write(" +
      "synthdata.trace_text(synthdata.benchmark('mg')))", tracePath]);
    execFileSync("python3", ["-m", "hmpt.cli", "plan", tracePath,
                             "--hbm", "0,1", "-o", planPath]);

    const backend = new MockBackend();
    const shim = new ShimRuntime(
      { plan: parsePlan(readFileSync(planPath, "utf8")), tracePath: null, defaultPool: 0 },
      backend);
    let fastBytes = 0;
    let totalBytes = 0;
    for (const site of sites) {
      const addr = shim.intercept_alloc(site.bytes, site.frames);
      totalBytes += site.bytes;
      if (backend.tagOf(addr) === 1) {
        fastBytes += site.bytes;
      }
    }
    shim.close();
    expect((100 * fastBytes) / totalBytes).toBe(69.6);
  });

  it("stays parseable for fuzzed schedules, live blocks included", () => {
    const rng = mulberry32(0xc0ffee);
    const paths: string[] = [];
    const peaks: number[] = [];
    for (let round = 0; round < 25; round++) {
      const schedule = randomSchedule(rng);
      const tracePath = join(workDir, `fuzz${round}.trace`);
      const shim = new ShimRuntime(
        { plan: null, tracePath, defaultPool: 0 }, new MockBackend());
      runReplayer(shim, schedule);
      shim.close();
      paths.push(tracePath);
      peaks.push(analyticPeak(schedule));
    }
    const out = execFileSync("python3", ["-c", PY_BATCH_FOOTPRINT, ...paths],
                             { encoding: "utf8" });
    expect(out.trim().split("\n").map(Number)).toEqual(peaks);
  });
});

const PY_BATCH_FOOTPRINT = `
import sys
from hmpt.trace import parse_trace, footprint
for path in sys.argv[1:]:
    with open(path) as fp:
        print(footprint(parse_trace(fp)))
`;

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function randomSchedule(rng: () => number): ScheduleOp[] {
  const ops: ScheduleOp[] = [];
  const live: string[] = [];
  let next = 0;
  const steps = 10 + Math.floor(rng() * 60);
  for (let i = 0; i < steps; i++) {
    if (live.length > 0 && rng() < 0.4) {
      const idx = Math.floor(rng() * live.length);
      ops.push({ op: "free", key: live[idx]! });
      live.splice(idx, 1);
    } else {
      const key = `blk${next++}`;
      ops.push({
        op: "alloc",
        site: Math.floor(rng() * 10),
        size: 1 + Math.floor(rng() * 65536),
        key,
      });
      live.push(key);
    }
  }
  return ops;
}
