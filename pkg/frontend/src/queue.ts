/** Client-side mutation serialization: at most one mutation is in flight,
 * later submissions wait for earlier ones, preserving the server's serial
 * order even when gestures fire faster than the network round trip. */
export class MutationQueue {
  private tail: Promise<unknown> = Promise.resolve();
  private pending = 0;

  get depth(): number {
    return this.pending;
  }

  submit<T>(task: () => Promise<T>): Promise<T> {
    this.pending += 1;
    const run = this.tail.then(async () => {
      try {
        return await task();
      } finally {
        this.pending -= 1;
      }
    });
    // keep the chain alive past failures; the caller still sees the rejection
    this.tail = run.catch(() => undefined);
    return run;
  }
}
