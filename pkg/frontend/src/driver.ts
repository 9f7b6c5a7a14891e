/** Headless session driver: the same submit/poll logic the page uses, callable
 * without a DOM. Powers the scripted end-to-end test and could drive bulk
 * labeling from a script. */
import type { ApiClient, LabelValue, PendingItem, SessionView } from "./api.js";

export interface DriveOptions {
  pollMs?: number;
  timeoutMs?: number;
  onIteration?: (view: SessionView, batchSize: number) => void;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

/** Label every queued item via chooseLabel until the session completes.
 * Returns the final session view; throws on abort or timeout. */
export async function labelUntilComplete(
  api: ApiClient,
  chooseLabel: (item: PendingItem) => LabelValue,
  opts: DriveOptions = {},
): Promise<SessionView> {
  const pollMs = opts.pollMs ?? 50;
  const deadline = Date.now() + (opts.timeoutMs ?? 120_000);
  let lastIteration = -1;
  while (Date.now() < deadline) {
    const session = await api.getSession();
    if (!session.ok) throw new Error(`session poll failed: ${JSON.stringify(session)}`);
    const view = session.value;
    if (view.state === "complete") return view;
    if (view.state === "aborted") throw new Error(`session aborted: ${view.error ?? ""}`);
    if (view.iteration !== lastIteration) lastIteration = view.iteration;

    const queue = await api.getQueue();
    if (!queue.ok) throw new Error(`queue poll failed: ${JSON.stringify(queue)}`);
    if (queue.value.length === 0) {
      await sleep(pollMs);
      continue;
    }
    opts.onIteration?.(view, queue.value.length);
    for (const item of queue.value) {
      const result = await api.postLabel(item.record_id, chooseLabel(item));
      if (!result.ok) throw new Error(`label post failed: ${JSON.stringify(result)}`);
    }
    await sleep(pollMs);
  }
  throw new Error("timed out waiting for the session to complete");
}
