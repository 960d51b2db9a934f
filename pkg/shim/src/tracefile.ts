/*
 * Buffered trace writer.
 *
 * Emits the line-delimited trace grammar the analysis tooling parses:
 *   K <site_hex> <frame>      A <t_ns> <site_hex> <addr_hex> <size>
 *   F <t_ns> <addr_hex>       S ... (never produced here; samples come from
 *                                    the sampling infrastructure, not the shim)
 * Lines are buffered and appended in batches so the allocation path stays
 * cheap; close() flushes whatever remains.
 */

import { appendFileSync, writeFileSync } from "node:fs";

import { siteHex } from "./hash.js";

const FLUSH_THRESHOLD = 256;

export class TraceWriter {
  private lines: string[] = [];
  private started = false;

  constructor(private readonly path: string | null) {}

  get enabled(): boolean {
    return this.path !== null;
  }

  comment(text: string): void {
    this.push(`# ${text}`);
  }

  frame(siteId: bigint, frame: string): void {
    this.push(`K ${siteHex(siteId)} ${frame}`);
  }

  alloc(tNs: bigint, siteId: bigint, addr: bigint, size: number): void {
    this.push(`A ${tNs} ${siteHex(siteId)} 0x${addr.toString(16)} ${size}`);
  }

  free(tNs: bigint, addr: bigint): void {
    this.push(`F ${tNs} 0x${addr.toString(16)}`);
  }

  flush(): void {
    if (!this.path || this.lines.length === 0) {
      return;
    }
    const chunk = this.lines.join("\n") + "\n";
    this.lines = [];
    if (!this.started) {
      writeFileSync(this.path, chunk);
      this.started = true;
    } else {
      appendFileSync(this.path, chunk);
    }
  }

  close(): void {
    this.flush();
  }

  private push(line: string): void {
    if (!this.path) {
      return;
    }
    this.lines.push(line);
    if (this.lines.length >= FLUSH_THRESHOLD) {
      this.flush();
    }
  }
}
