/*
 * Allocation interposer.
 *
 * Sits between an application and a pool backend: every allocation call is
 * hashed to its call-site id, looked up in the placement plan, routed to
 * the planned pool, and appended to the trace file (frame records on first
 * sight of a site, then one A record per allocation and one F per free).
 * Without a plan the shim runs record-only: everything goes to the default
 * pool and only the trace is produced.  Foreign frees (addresses the shim
 * never handed out) pass through silently and leave no record.
 */

import { hrtime } from "node:process";

import { BackendError, PoolBackend } from "./backend.js";
import { siteHash } from "./hash.js";
import { Plan, loadPlan } from "./plan.js";
import { TraceWriter } from "./tracefile.js";

export const ENV_PLAN = "HMPT_PLAN";
export const ENV_TRACE_OUT = "HMPT_TRACE_OUT";
export const ENV_DEFAULT_POOL = "HMPT_DEFAULT_POOL";

export const MAX_STACK_DEPTH = 32; // deeper frames are truncated before hashing

export interface ShimConfig {
  plan: Plan | null; // null => record-only mode
  tracePath: string | null;
  defaultPool: number;
}

export function configFromEnv(env: NodeJS.ProcessEnv = process.env): ShimConfig {
  const planPath = env[ENV_PLAN];
  return {
    plan: planPath ? loadPlan(planPath) : null,
    tracePath: env[ENV_TRACE_OUT] ?? null,
    defaultPool: Number(env[ENV_DEFAULT_POOL] ?? "0"),
  };
}

export class ShimRuntime {
  private readonly trace: TraceWriter;
  private readonly seenSites = new Set<bigint>();
  private readonly owned = new Set<bigint>();
  private lastTimestamp = 0n;

  constructor(
    private readonly config: ShimConfig,
    private readonly backend: PoolBackend,
  ) {
    this.trace = new TraceWriter(config.tracePath);
    if (config.plan === null) {
      this.trace.comment("record-only mode: no placement plan");
    }
  }

  /** Allocate `size` bytes on behalf of the call stack `frames`. */
  intercept_alloc(size: number, frames: readonly string[]): bigint {
    const stack = frames.slice(0, MAX_STACK_DEPTH);
    const siteId = siteHash(stack);
    if (!this.seenSites.has(siteId)) {
      this.seenSites.add(siteId);
      for (const frame of stack) {
        this.trace.frame(siteId, frame);
      }
    }
    const planned = this.config.plan?.assignments.get(siteId)
      ?? this.config.defaultPool;
    let addr: bigint;
    try {
      addr = this.backend.alloc(size, planned);
    } catch (err) {
      if (!(err instanceof BackendError) || planned === this.config.defaultPool) {
        throw err;
      }
      this.trace.comment(
        `warn: pool ${planned} failed for site ${siteId.toString(16)}, using default`);
      addr = this.backend.alloc(size, this.config.defaultPool);
    }
    this.trace.alloc(this.now(), siteId, addr, size);
    this.owned.add(addr);
    return addr;
  }

  /** Free an address; foreign addresses pass through without a record. */
  intercept_free(addr: bigint): void {
    if (!this.owned.delete(addr)) {
      return;
    }
    this.backend.free(addr);
    this.trace.free(this.now(), addr);
  }

  /** Flush the trace; call on application exit. */
  close(): void {
    this.trace.close();
  }

  private now(): bigint {
    const t = hrtime.bigint();
    // trace timestamps must be monotonic even if the clock stalls
    this.lastTimestamp = t > this.lastTimestamp ? t : this.lastTimestamp + 1n;
    return this.lastTimestamp;
  }
}
