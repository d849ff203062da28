/**
 * Single-page client for the phrase-recognition service.
 *
 * Four screens: login/register, navigation menu, training mode (record five
 * repetitions of each phrase), and loud-speaking mode (record a silent
 * utterance, pick the intended phrase from the ranked candidates, speak it).
 */

import { ApiClient, ApiError, InferenceResult, Lexicon } from './api.js';
import {
  CaptureSettings,
  DEFAULT_CAPTURE,
  FrameSource,
  captureClip,
} from './capture.js';
import { encodeLvf } from './lvf.js';
import { Speaker } from './speech.js';

export const REPETITION_TARGET = 5;
export const CANDIDATE_COUNT = 5;

interface PendingUpload {
  phraseId: number;
  repetitionIndex: number;
  bytes: Uint8Array;
}

export interface AppDeps {
  api: ApiClient;
  frameSource: FrameSource;
  speak: Speaker;
  settings?: CaptureSettings;
  /** Pause between sampled frames and poll ticks; instant in tests. */
  wait?: (ms: number) => Promise<unknown>;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export class App {
  private readonly api: ApiClient;
  private readonly frameSource: FrameSource;
  private readonly speak: Speaker;
  private readonly settings: CaptureSettings;
  private readonly wait: (ms: number) => Promise<unknown>;

  private lexicon: Lexicon | null = null;
  private progress = new Map<number, number>();
  private lastInference: InferenceResult | null = null;
  private selectionDone = false;
  private pendingUpload: PendingUpload | null = null;
  private queue: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    deps: AppDeps,
  ) {
    this.api = deps.api;
    this.frameSource = deps.frameSource;
    this.speak = deps.speak;
    this.settings = deps.settings ?? DEFAULT_CAPTURE;
    this.wait = deps.wait ?? sleep;
    this.showLogin();
  }

  /** Resolves when every queued user action has finished. */
  idle(): Promise<void> {
    return this.queue;
  }

  /** Serialize handlers: at most one in-flight capture/upload/request. */
  private enqueue(action: () => Promise<void>): void {
    this.queue = this.queue.then(action);
  }

  private element<T extends HTMLElement>(id: string): T {
    const found = this.root.querySelector(`#${id}`);
    if (found === null) {
      throw new Error(`missing element #${id}`);
    }
    return found as T;
  }

  private setText(id: string, text: string): void {
    this.element(id).textContent = text;
  }

  // ---- login screen ----

  private showLogin(): void {
    this.root.innerHTML = `
      <section id="login-screen">
        <h1>liplink</h1>
        <input id="username" placeholder="username" />
        <input id="password" type="password" placeholder="password" />
        <button id="login-btn">Log in</button>
        <button id="register-btn">Register</button>
        <p id="auth-error" class="error"></p>
      </section>`;
    this.element('login-btn').addEventListener('click', () =>
      this.enqueue(() => this.handleAuth(false)),
    );
    this.element('register-btn').addEventListener('click', () =>
      this.enqueue(() => this.handleAuth(true)),
    );
  }

  private async handleAuth(register: boolean): Promise<void> {
    const username = this.element<HTMLInputElement>('username').value.trim();
    const password = this.element<HTMLInputElement>('password').value;
    try {
      if (register) {
        await this.api.register(username, password);
      }
      await this.api.login(username, password);
      this.lexicon = await this.api.getLexicon();
      this.progress = new Map(this.lexicon.phrases.map((p) => [p.id, 0]));
      this.showMenu();
    } catch (error) {
      this.setText(
        'auth-error',
        error instanceof ApiError ? error.message : 'cannot reach the server',
      );
    }
  }

  // ---- navigation menu ----

  private showMenu(): void {
    this.root.innerHTML = `
      <section id="menu-screen">
        <h1>liplink</h1>
        <button id="goto-training">Training</button>
        <button id="goto-speaking">Loud speaking</button>
        <button id="logout-btn">Log out</button>
      </section>`;
    this.element('goto-training').addEventListener('click', () =>
      this.showTraining(),
    );
    this.element('goto-speaking').addEventListener('click', () =>
      this.showSpeaking(),
    );
    this.element('logout-btn').addEventListener('click', () => {
      this.api.logout();
      this.showLogin();
    });
  }

  // ---- training mode ----

  private nextPhraseId(): number | null {
    for (const phrase of this.lexicon!.phrases) {
      if ((this.progress.get(phrase.id) ?? 0) < REPETITION_TARGET) {
        return phrase.id;
      }
    }
    return null;
  }

  private showTraining(): void {
    this.root.innerHTML = `
      <section id="training-screen">
        <h2>Training</h2>
        <p id="phrase-prompt"></p>
        <button id="record-btn">Record repetition</button>
        <button id="retry-btn" hidden>Retry upload</button>
        <p id="upload-error" class="error"></p>
        <ul id="progress-list"></ul>
        <button id="train-btn">Train model</button>
        <p id="train-status"></p>
        <button id="back-btn">Back</button>
      </section>`;
    this.element('record-btn').addEventListener('click', () =>
      this.enqueue(() => this.recordRepetition()),
    );
    this.element('retry-btn').addEventListener('click', () =>
      this.enqueue(() => this.sendPendingUpload()),
    );
    this.element('train-btn').addEventListener('click', () =>
      this.enqueue(() => this.runTraining()),
    );
    this.element('back-btn').addEventListener('click', () => this.showMenu());
    this.renderTrainingState();
  }

  private renderTrainingState(): void {
    const next = this.nextPhraseId();
    const prompt =
      next === null
        ? 'All phrases recorded.'
        : `Please say: “${this.phraseText(next)}”`;
    this.setText('phrase-prompt', prompt);
    this.element<HTMLButtonElement>('record-btn').disabled = next === null;
    const list = this.element<HTMLUListElement>('progress-list');
    list.innerHTML = '';
    for (const phrase of this.lexicon!.phrases) {
      const item = document.createElement('li');
      const count = this.progress.get(phrase.id) ?? 0;
      item.textContent = `${phrase.text}: ${count}/${REPETITION_TARGET}`;
      item.dataset.phraseId = String(phrase.id);
      list.appendChild(item);
    }
  }

  private phraseText(phraseId: number): string {
    return this.lexicon!.phrases.find((p) => p.id === phraseId)!.text;
  }

  private async recordRepetition(): Promise<void> {
    const phraseId = this.nextPhraseId();
    if (phraseId === null) {
      return;
    }
    const clip = await captureClip(this.frameSource, this.settings, this.wait);
    this.pendingUpload = {
      phraseId,
      repetitionIndex: this.progress.get(phraseId) ?? 0,
      bytes: encodeLvf(clip.frames, clip.fps),
    };
    await this.sendPendingUpload();
  }

  private async sendPendingUpload(): Promise<void> {
    const pending = this.pendingUpload;
    if (pending === null) {
      return;
    }
    try {
      await this.api.uploadRecording(
        pending.phraseId,
        pending.repetitionIndex,
        pending.bytes,
      );
      this.progress.set(pending.phraseId, pending.repetitionIndex + 1);
      this.pendingUpload = null;
      this.setText('upload-error', '');
      this.element('retry-btn').hidden = true;
      this.renderTrainingState();
    } catch (error) {
      // keep the identical bytes for retry; progress stays unchanged
      this.setText(
        'upload-error',
        error instanceof ApiError ? error.message : 'upload failed',
      );
      this.element('retry-btn').hidden = false;
    }
  }

  private async runTraining(): Promise<void> {
    try {
      this.setText('train-status', 'training…');
      const jobId = await this.api.startTraining();
      for (;;) {
        const job = await this.api.getTrainJob(jobId);
        if (job.state === 'succeeded' || job.state === 'failed') {
          this.setText(
            'train-status',
            job.state === 'succeeded'
              ? 'training finished'
              : `training failed: ${job.error ?? 'unknown error'}`,
          );
          return;
        }
        await this.wait(200);
      }
    } catch (error) {
      this.setText(
        'train-status',
        error instanceof ApiError ? error.message : 'training request failed',
      );
    }
  }

  // ---- loud-speaking mode ----

  private showSpeaking(): void {
    this.root.innerHTML = `
      <section id="speaking-screen">
        <h2>Loud speaking</h2>
        <button id="speak-record-btn">Record utterance</button>
        <p id="speak-error" class="error"></p>
        <ol id="candidate-list"></ol>
        <p id="speech-fallback" hidden></p>
        <button id="back-btn">Back</button>
      </section>`;
    this.element('speak-record-btn').addEventListener('click', () =>
      this.enqueue(() => this.recordAndInfer()),
    );
    this.element('back-btn').addEventListener('click', () => this.showMenu());
  }

  private async recordAndInfer(): Promise<void> {
    this.setText('speak-error', '');
    this.element('speech-fallback').hidden = true;
    const clip = await captureClip(this.frameSource, this.settings, this.wait);
    try {
      this.lastInference = await this.api.infer(
        encodeLvf(clip.frames, clip.fps),
        Math.min(CANDIDATE_COUNT, this.lexicon!.phrases.length),
      );
      this.selectionDone = false;
      this.renderCandidates();
    } catch (error) {
      if (error instanceof ApiError && error.code === 'NoModel') {
        this.setText('speak-error', 'No model yet — train first.');
      } else {
        this.setText(
          'speak-error',
          error instanceof ApiError ? error.message : 'inference failed',
        );
      }
    }
  }

  private renderCandidates(): void {
    const list = this.element<HTMLOListElement>('candidate-list');
    list.innerHTML = '';
    // display order equals response order; candidates are never resorted
    this.lastInference!.candidates.forEach((candidate, index) => {
      const row = document.createElement('button');
      row.className = 'candidate' + (candidate.rank === 1 ? ' preselected' : '');
      row.dataset.rank = String(candidate.rank);
      row.textContent = `${candidate.rank}. ${candidate.text} (${(
        candidate.probability * 100
      ).toFixed(1)}%)`;
      row.addEventListener('click', () =>
        this.enqueue(() => this.chooseCandidate(index)),
      );
      list.appendChild(row);
    });
  }

  private async chooseCandidate(index: number): Promise<void> {
    if (this.lastInference === null || this.selectionDone) {
      return;
    }
    const candidate = this.lastInference.candidates[index];
    try {
      await this.api.select(
        this.lastInference.inference_id,
        candidate.phrase_id,
      );
    } catch (error) {
      this.setText(
        'speak-error',
        error instanceof ApiError ? error.message : 'selection failed',
      );
      return;
    }
    this.selectionDone = true;
    this.root
      .querySelectorAll<HTMLButtonElement>('#candidate-list .candidate')
      .forEach((row) => {
        row.disabled = true;
      });
    if (!this.speak(candidate.text)) {
      const fallback = this.element('speech-fallback');
      fallback.hidden = false;
      fallback.textContent = candidate.text;
    }
  }
}
