/*
 * Pool backends.
 *
 * A backend hands out addresses and accepts frees; the pool id expresses
 * where the block should live.  The mock backend is a bump allocator whose
 * address sequence depends only on the request sequence (never on the
 * chosen pool), so placement-driven runs and record-only runs stay
 * byte-comparable; the pool is kept purely as a queryable tag.  A real
 * tiered-memory backend would bind the range to the pool instead.
 */

export interface PoolBackend {
  alloc(size: number, pool: number): bigint;
  free(addr: bigint): void;
  /** pool tag of a live allocation, or undefined for foreign addresses */
  tagOf(addr: bigint): number | undefined;
}

export class BackendError extends Error {}

const BASE_ADDRESS = 0x10_0000n;
const ALIGNMENT = 16n;

interface Block {
  size: number;
  pool: number;
}

export class MockBackend implements PoolBackend {
  private cursor = BASE_ADDRESS;
  private live = new Map<bigint, Block>();
  readonly tags: number[] = []; // pool tag per allocation, in call order

  constructor(private readonly failPools: ReadonlySet<number> = new Set()) {}

  alloc(size: number, pool: number): bigint {
    if (size <= 0 || !Number.isInteger(size)) {
      throw new BackendError(`bad allocation size ${size}`);
    }
    if (this.failPools.has(pool)) {
      throw new BackendError(`pool ${pool} exhausted`);
    }
    const addr = this.cursor;
    const step = (BigInt(size) + ALIGNMENT - 1n) / ALIGNMENT * ALIGNMENT;
    this.cursor += step;
    this.live.set(addr, { size, pool });
    this.tags.push(pool);
    return addr;
  }

  free(addr: bigint): void {
    if (!this.live.delete(addr)) {
      throw new BackendError(`free of unknown address 0x${addr.toString(16)}`);
    }
  }

  tagOf(addr: bigint): number | undefined {
    return this.live.get(addr)?.pool;
  }

  liveBytes(): number {
    let total = 0;
    for (const block of this.live.values()) {
      total += block.size;
    }
    return total;
  }
}
