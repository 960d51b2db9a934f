/*
 * Placement plan files: which allocation site goes to which memory pool.
 *
 * The file format is owned by the driver tooling; this side only reads it:
 *   {"version": 1, "default_pool": 0, "assignments": {"<site hex>": pool}}
 */

import { readFileSync } from "node:fs";

export const PLAN_VERSION = 1;

export interface Plan {
  defaultPool: number;
  assignments: Map<bigint, number>;
}

export class PlanError extends Error {}

export function parsePlan(text: string): Plan {
  let data: unknown;
  try {
    data = JSON.parse(text);
  } catch (err) {
    throw new PlanError(`plan is not valid JSON: ${err}`);
  }
  const obj = data as Record<string, unknown>;
  if (obj.version !== PLAN_VERSION) {
    throw new PlanError(`unsupported plan version ${String(obj.version)}`);
  }
  const assignments = new Map<bigint, number>();
  const raw = (obj.assignments ?? {}) as Record<string, unknown>;
  for (const [siteText, pool] of Object.entries(raw)) {
    if (!/^[0-9a-fA-F]+$/.test(siteText)) {
      throw new PlanError(`bad site id ${JSON.stringify(siteText)} in plan`);
    }
    if (typeof pool !== "number" || !Number.isInteger(pool) || pool < 0) {
      throw new PlanError(`bad pool id for site ${siteText}`);
    }
    assignments.set(BigInt(`0x${siteText}`), pool);
  }
  const defaultPool = obj.default_pool ?? 0;
  if (typeof defaultPool !== "number" || !Number.isInteger(defaultPool)) {
    throw new PlanError("bad default_pool");
  }
  return { defaultPool, assignments };
}

export function loadPlan(path: string): Plan {
  return parsePlan(readFileSync(path, "utf8"));
}
