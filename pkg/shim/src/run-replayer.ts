/*
 * CLI entry: run the replayer under the shim, configured from the
 * environment (HMPT_PLAN, HMPT_TRACE_OUT, HMPT_DEFAULT_POOL), with the
 * mock pool backend.  Lets the measurement harness drive this package as
 * an external executable.
 */

import { MockBackend } from "./backend.js";
import { SCHEDULE, runReplayer } from "./replayer.js";
import { ShimRuntime, configFromEnv } from "./shim.js";

function main(): number {
  const config = configFromEnv();
  const backend = new MockBackend();
  const shim = new ShimRuntime(config, backend);
  runReplayer(shim);
  shim.close();
  const fast = backend.tags.filter((t) => t !== config.defaultPool).length;
  console.log(
    `replayer: ${backend.tags.length} allocations, ` +
    `${fast} routed off the default pool` +
    (config.tracePath ? `, trace -> ${config.tracePath}` : ""));
  return 0;
}

process.exit(main());
