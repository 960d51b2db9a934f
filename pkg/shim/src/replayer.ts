/*
 * Deterministic replayer: a stand-in application with ten known allocation
 * sites and a fixed alloc/free schedule.
 *
 * The schedule is plain data so tests can compute expected properties (peak
 * live bytes, per-site routing) directly from the declaration, independent
 * of what the shim records.
 */

import { ShimRuntime } from "./shim.js";

export const SITE_COUNT = 10;

export function siteFrames(site: number): string[] {
  return [`replayer.ts:alloc_site_${site}`, "replayer.ts:main"];
}

export type ScheduleOp =
  | { op: "alloc"; site: number; size: number; key: string }
  | { op: "free"; key: string };

/*
 * Three phases: every site allocates once, the first five release their
 * blocks, then allocate larger replacements (the live-byte peak), and
 * finally everything is torn down except one deliberate leak.
 */
export const SCHEDULE: ScheduleOp[] = [
  ...Array.from({ length: SITE_COUNT }, (_, i): ScheduleOp => (
    { op: "alloc", site: i, size: 1000 * (i + 1), key: `first_${i}` })),
  ...Array.from({ length: 5 }, (_, i): ScheduleOp => (
    { op: "free", key: `first_${i}` })),
  ...Array.from({ length: 5 }, (_, i): ScheduleOp => (
    { op: "alloc", site: i, size: 3000 * (i + 1), key: `second_${i}` })),
  ...Array.from({ length: 5 }, (_, i): ScheduleOp => (
    { op: "free", key: `second_${i}` })),
  ...Array.from({ length: 4 }, (_, i): ScheduleOp => (
    { op: "free", key: `first_${i + 5}` })),
  // first_9 leaks on purpose: traces must stay parseable with live blocks
];

/** Peak concurrent bytes implied by a schedule (independent oracle). */
export function analyticPeak(schedule: ScheduleOp[] = SCHEDULE): number {
  const sizes = new Map<string, number>();
  let live = 0;
  let peak = 0;
  for (const op of schedule) {
    if (op.op === "alloc") {
      sizes.set(op.key, op.size);
      live += op.size;
      peak = Math.max(peak, live);
    } else {
      live -= sizes.get(op.key) ?? 0;
    }
  }
  return peak;
}

export interface ReplayResult {
  /** allocation address per schedule key */
  addresses: Map<string, bigint>;
  /** site of each allocation, in call order */
  allocSites: number[];
}

export function runReplayer(shim: ShimRuntime,
                            schedule: ScheduleOp[] = SCHEDULE): ReplayResult {
  const addresses = new Map<string, bigint>();
  const allocSites: number[] = [];
  for (const op of schedule) {
    if (op.op === "alloc") {
      const addr = shim.intercept_alloc(op.size, siteFrames(op.site));
      addresses.set(op.key, addr);
      allocSites.push(op.site);
    } else {
      const addr = addresses.get(op.key);
      if (addr === undefined) {
        throw new Error(`schedule frees unknown key ${op.key}`);
      }
      shim.intercept_free(addr);
    }
  }
  return { addresses, allocSites };
}
