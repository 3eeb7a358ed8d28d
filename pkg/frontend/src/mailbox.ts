/**
 * Latest-value mailbox: network handlers post, the render loop takes.
 *
 * The render loop runs once per animation frame and must never block on
 * the socket, so each message type keeps exactly one slot — a newer value
 * silently replaces an older one that was never consumed. Stale visemes
 * are worthless; only the freshest matters.
 */

export class Mailbox<T extends { type: string }> {
  private slots = new Map<string, T>();

  post(message: T): void {
    this.slots.set(message.type, message);
  }

  /** Consume the latest message of one type, or null if none arrived. */
  take(type: T["type"]): T | null {
    const value = this.slots.get(type);
    if (value === undefined) return null;
    this.slots.delete(type);
    return value;
  }

  /** Read without consuming. */
  peek(type: T["type"]): T | null {
    return this.slots.get(type) ?? null;
  }

  clear(): void {
    this.slots.clear();
  }
}
