/** Server-authoritative viewer state.
 *
 * Every event carries the full scene document tagged with its revision, so
 * applying them in monotonically increasing revision order is the whole
 * ordering story: a late (stale) snapshot is dropped, a snapshot that jumps
 * ahead (e.g. the replay after a reconnect) is adopted as-is. The client
 * never flips visibility locally; it waits for the server's event.
 */

import { SceneDoc, visibilityOf } from "./sceneDoc";

type Waiter = { revision: number; resolve: () => void };

export class ViewerModel {
  private current: SceneDoc | null = null;
  private waiters: Waiter[] = [];
  private listeners: Array<(scene: SceneDoc) => void> = [];

  get scene(): SceneDoc | null {
    return this.current;
  }

  get revision(): number {
    return this.current ? this.current.revision : -1;
  }

  /** Adopt a scene snapshot; returns true when the state advanced. */
  apply(scene: SceneDoc): boolean {
    if (this.current && scene.revision <= this.current.revision) {
      return false; // stale or duplicate snapshot
    }
    this.current = scene;
    for (const listener of this.listeners) listener(scene);
    this.waiters = this.waiters.filter((w) => {
      if (scene.revision >= w.revision) {
        w.resolve();
        return false;
      }
      return true;
    });
    return true;
  }

  visibility(): Record<string, boolean> {
    return this.current ? visibilityOf(this.current) : {};
  }

  onChange(listener: (scene: SceneDoc) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  /** Resolves once the model has applied the given revision (or newer). */
  waitForRevision(revision: number, timeoutMs = 5000): Promise<void> {
    if (this.current && this.current.revision >= revision) return Promise.resolve();
    return new Promise((resolve, reject) => {
      const waiter = { revision, resolve };
      this.waiters.push(waiter);
      setTimeout(() => {
        const index = this.waiters.indexOf(waiter);
        if (index >= 0) {
          this.waiters.splice(index, 1);
          reject(new Error(`revision ${revision} not reached in ${timeoutMs} ms`));
        }
      }, timeoutMs);
    });
  }
}
