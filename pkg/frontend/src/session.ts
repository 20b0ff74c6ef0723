/** Client-side session identity and reload-safe persistence of page state. */

const SESSION_KEY = "avsearch.session_id";

export function sessionId(storage: Storage = localStorage): string {
  let id = storage.getItem(SESSION_KEY);
  if (!id) {
    id = `s-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
    storage.setItem(SESSION_KEY, id);
  }
  return id;
}

/** Namespaced JSON persistence so a half-completed comparison survives reload. */
export class PersistentState<T> {
  constructor(
    private readonly key: string,
    private readonly storage: Storage = localStorage,
  ) {}

  load(): T | null {
    const raw = this.storage.getItem(this.key);
    if (raw === null) return null;
    try {
      return JSON.parse(raw) as T;
    } catch {
      return null;
    }
  }

  save(value: T): void {
    this.storage.setItem(this.key, JSON.stringify(value));
  }

  clear(): void {
    this.storage.removeItem(this.key);
  }
}
