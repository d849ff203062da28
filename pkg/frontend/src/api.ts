/**
 * Thin typed client for the phrase-recognition HTTP API.
 *
 * The fetch implementation is injectable so tests can run against an
 * in-memory fake server. The token lives only in this object; it is never
 * written to any durable storage.
 */

import { bytesToBase64 } from './lvf.js';

export interface LexiconPhrase {
  id: number;
  text: string;
}

export interface Lexicon {
  version: number;
  phrases: LexiconPhrase[];
}

export interface Candidate {
  rank: number;
  phrase_id: number;
  text: string;
  probability: number;
}

export interface InferenceResult {
  inference_id: string;
  model_version: number;
  candidates: Candidate[];
}

export interface TrainJob {
  job_id: string;
  state: 'queued' | 'running' | 'succeeded' | 'failed';
  error: string | null;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchFn = typeof fetch;

export class ApiClient {
  private token: string | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchFn = (...args) => fetch(...args),
  ) {}

  get loggedIn(): boolean {
    return this.token !== null;
  }

  logout(): void {
    this.token = null;
  }

  private async request(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<unknown> {
    const headers: Record<string, string> = {};
    if (body !== undefined) {
      headers['Content-Type'] = 'application/json';
    }
    if (this.token !== null) {
      headers['Authorization'] = `Bearer ${this.token}`;
    }
    const response = await this.fetchFn(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (response.status === 204) {
      return null;
    }
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(
        response.status,
        payload.error ?? 'Unknown',
        payload.message ?? `request failed with ${response.status}`,
      );
    }
    return payload;
  }

  async register(username: string, password: string): Promise<void> {
    await this.request('POST', '/auth/register', { username, password });
  }

  async login(username: string, password: string): Promise<void> {
    const payload = (await this.request('POST', '/auth/login', {
      username,
      password,
    })) as { token: string };
    this.token = payload.token;
  }

  async getLexicon(): Promise<Lexicon> {
    return (await this.request('GET', '/lexicon')) as Lexicon;
  }

  /** Returns true when the upload created a new recording (201 vs 200). */
  async uploadRecording(
    phraseId: number,
    repetitionIndex: number,
    lvfBytes: Uint8Array,
  ): Promise<void> {
    await this.request('POST', '/recordings', {
      phrase_id: phraseId,
      repetition_index: repetitionIndex,
      lvf_base64: bytesToBase64(lvfBytes),
    });
  }

  async startTraining(): Promise<string> {
    const payload = (await this.request('POST', '/train', {})) as {
      job_id: string;
    };
    return payload.job_id;
  }

  async getTrainJob(jobId: string): Promise<TrainJob> {
    return (await this.request('GET', `/train/${jobId}`)) as TrainJob;
  }

  async infer(lvfBytes: Uint8Array, k: number): Promise<InferenceResult> {
    return (await this.request('POST', '/infer', {
      k,
      lvf_base64: bytesToBase64(lvfBytes),
    })) as InferenceResult;
  }

  async select(inferenceId: string, phraseId: number): Promise<void> {
    await this.request('POST', '/selections', {
      inference_id: inferenceId,
      chosen_phrase_id: phraseId,
    });
  }
}
