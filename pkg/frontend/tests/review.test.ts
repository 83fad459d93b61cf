import { beforeEach, describe, expect, it } from "vitest";

import { GatewayError } from "../src/api.js";
import { SessionStore, setDecision, startSession, type ReviewSession } from "../src/session.js";
import { renderReview, renderReviewError, type ReviewHandlers } from "../src/views/review.js";
import { candidates, MemoryStorage } from "./helpers.js";

const REF = "demo-cat/CRY-01";

let container: HTMLElement;
let store: SessionStore;

beforeEach(() => {
  document.body.innerHTML = '<div id="app"></div>';
  container = document.getElementById("app")!;
  store = new SessionStore(new MemoryStorage());
});

function noopHandlers(overrides: Partial<ReviewHandlers> = {}): ReviewHandlers {
  return {
    onDecision: () => undefined,
    onSubmit: () => undefined,
    onRetry: () => undefined,
    ...overrides,
  };
}

describe("review view", () => {
  it("renders candidates in rank order with scores", () => {
    const session = startSession(REF, candidates(["tls", 0.82], ["rest", 0.13], ["ai", 0.0]), store);
    renderReview(container, session, noopHandlers());
    const rows = [...container.querySelectorAll("tr[data-candidate]")];
    expect(rows.map((row) => row.getAttribute("data-candidate"))).toEqual(["tls", "rest", "ai"]);
    expect(container.querySelector(".score")!.textContent).toBe("0.820000");
    expect(container.textContent).toContain(REF);
  });

  it("wires accept and reject buttons to the decision handler", () => {
    const session = startSession(REF, candidates(["tls", 0.82], ["rest", 0.13]), store);
    const seen: [string, string][] = [];
    renderReview(container, session, noopHandlers({ onDecision: (id, d) => seen.push([id, d]) }));
    (container.querySelector('tr[data-candidate="tls"] [data-action="accept"]') as HTMLButtonElement).click();
    (container.querySelector('tr[data-candidate="rest"] [data-action="reject"]') as HTMLButtonElement).click();
    expect(seen).toEqual([
      ["tls", "accept"],
      ["rest", "reject"],
    ]);
  });

  it("disables submit until something is accepted", () => {
    let session: ReviewSession = startSession(REF, candidates(["tls", 0.82]), store);
    renderReview(container, session, noopHandlers());
    const submit = () => container.querySelector('[data-testid="submit"]') as HTMLButtonElement;
    expect(submit().disabled).toBe(true);

    session = setDecision(session, "tls", "accept", store);
    renderReview(container, session, noopHandlers());
    expect(submit().disabled).toBe(false);
    expect(container.querySelector('[data-testid="accepted-count"]')!.textContent).toContain("1 accepted");
  });

  it("shows the submitted state", () => {
    let session = startSession(REF, candidates(["tls", 0.82]), store);
    session = { ...setDecision(session, "tls", "accept", store), submitted: true };
    renderReview(container, session, noopHandlers());
    expect(container.querySelector('[data-testid="submitted-note"]')).not.toBeNull();
    expect((container.querySelector('[data-testid="submit"]') as HTMLButtonElement).disabled).toBe(true);
  });

  it("renders gateway errors verbatim with a retry hook", () => {
    const error = new GatewayError(404, "UnknownControl", "control 'ZZZ-9' is not in catalog 'demo-cat'");
    let retried = 0;
    renderReviewError(container, error, { onRetry: () => retried++ });
    const banner = container.querySelector('[data-testid="error-banner"]')!;
    expect(banner.textContent).toContain("UnknownControl");
    expect(banner.textContent).toContain("control 'ZZZ-9' is not in catalog 'demo-cat'");
    (banner.querySelector('[data-action="retry"]') as HTMLButtonElement).click();
    expect(retried).toBe(1);
  });

  it("escapes candidate ids in markup", () => {
    const session = startSession(REF, candidates(['<img src=x onerror="boom">', 0.5]), store);
    renderReview(container, session, noopHandlers());
    expect(container.querySelector("img")).toBeNull();
  });
});
