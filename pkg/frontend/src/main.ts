/**
 * Application shell: wires the headless viewer core to the DOM — canvas,
 * audio element, controls, socket, mic and the host-page embed API.
 */

import { ViewerClient } from "./client";
import { attachEmbedApi } from "./embed";
import { MicSession, startMicCapture } from "./mic";
import { ServerMessage } from "./protocol";
import { drawAvatar } from "./render";
import { buildMouthRig } from "./rig";
import { resolveServer } from "./serverUrl";
import { parseTrack } from "./trackPlayer";
import { ViewerState } from "./viewerState";

const MESSAGE_TYPES: ServerMessage["type"][] = [
  "Ready",
  "TrackHeader",
  "Viseme",
  "LiveViseme",
  "Done",
  "Error",
];

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as T;
}

export function boot(): void {
  const canvas = byId<HTMLCanvasElement>("avatar-canvas");
  const ctx = canvas.getContext("2d");
  if (ctx === null) throw new Error("canvas 2d context unavailable");
  const banner = byId<HTMLDivElement>("banner");
  const status = byId<HTMLDivElement>("status");
  const profileSelect = byId<HTMLSelectElement>("profile-select");
  const fileInput = byId<HTMLInputElement>("wav-input");
  const micButton = byId<HTMLButtonElement>("mic-button");
  const trackInput = byId<HTMLInputElement>("track-url");
  const trackButton = byId<HTMLButtonElement>("track-button");
  const audio = byId<HTMLAudioElement>("playback");

  const params = new URLSearchParams(window.location.search);
  const { wsUrl, httpBase } = resolveServer(params.get("server"), window.location);
  const requestedProfile = params.get("profile");

  const state = new ViewerState(buildMouthRig());
  const client = new ViewerClient({ url: wsUrl });

  let audioAttached = false;
  let localClock = 0; // drives track playback when no audio file is attached
  let profileSent = false;
  let mic: MicSession | null = null;
  let uiError: string | null = null;

  function showError(message: string): void {
    uiError = message;
  }

  function attachAudio(url: string): void {
    audio.src = url.startsWith("/") ? httpBase + url : url;
    audioAttached = true;
    void audio.play().catch((e) => showError(`audio playback blocked: ${e}`));
  }

  function detachAudio(): void {
    audio.pause();
    audio.removeAttribute("src");
    audioAttached = false;
    localClock = 0;
  }

  client.onStateChange = (s) => {
    state.setConnection(s === "ready");
    if (s !== "ready") {
      detachAudio();
      if (mic !== null) {
        mic.stop();
        mic = null;
        micButton.textContent = "Start mic";
      }
      profileSent = false;
    } else if (requestedProfile !== null && !profileSent) {
      profileSent = true;
      client.loadProfile(requestedProfile);
    }
  };

  // --- controls ----------------------------------------------------------

  void fetch(`${httpBase}/profiles`)
    .then((r) => r.json())
    .then((ids: string[]) => {
      profileSelect.innerHTML = "";
      for (const id of ids) {
        const option = document.createElement("option");
        option.value = id;
        option.textContent = id;
        if (id === requestedProfile) option.selected = true;
        profileSelect.appendChild(option);
      }
    })
    .catch(() => showError("could not list profiles"));

  profileSelect.addEventListener("change", () => {
    if (client.state === "ready") client.loadProfile(profileSelect.value);
  });

  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (file === undefined || client.state !== "ready") return;
    void file.arrayBuffer().then((bytes) => {
      detachAudio();
      client.uploadWav(bytes);
    });
  });

  micButton.addEventListener("click", () => {
    if (mic !== null) {
      mic.stop();
      mic = null;
      micButton.textContent = "Start mic";
      return;
    }
    if (client.state !== "ready") return;
    void startMicCapture(client, showError).then((session) => {
      if (session === null) return;
      mic = session;
      state.beginLive();
      micButton.textContent = "Stop mic";
    });
  });

  trackButton.addEventListener("click", () => {
    const url = trackInput.value.trim();
    if (url === "") return;
    playTrackFromUrl(url, null);
  });

  function playTrackFromUrl(trackUrl: string, audioUrl: string | null): void {
    void fetch(trackUrl)
      .then((r) => {
        if (!r.ok) throw new Error(`HTTP ${r.status}`);
        return r.text();
      })
      .then((text) => {
        const track = parseTrack(text);
        detachAudio();
        localClock = 0;
        state.playLocalTrack(track);
        if (audioUrl !== null) attachAudio(audioUrl);
      })
      .catch((e) => showError(`could not load track: ${e}`));
  }

  // --- host page embed API ----------------------------------------------

  attachEmbedApi({
    speak(wavUrl) {
      return fetch(wavUrl)
        .then((r) => {
          if (!r.ok) throw new Error(`HTTP ${r.status}`);
          return r.arrayBuffer();
        })
        .then((bytes) => {
          if (client.state !== "ready") throw new Error("session not ready");
          detachAudio();
          client.uploadWav(bytes);
        })
        .catch((e) => showError(`speak failed: ${e}`));
    },
    playTrack(trackUrl, audioUrl) {
      playTrackFromUrl(trackUrl, audioUrl);
    },
    setProfile(profileId) {
      if (client.state === "ready") client.loadProfile(profileId);
    },
  });

  // --- render loop -------------------------------------------------------

  let lastNow = performance.now();

  function frame(now: number): void {
    const dt = Math.min((now - lastNow) / 1000, 0.25);
    lastNow = now;

    for (const type of MESSAGE_TYPES) {
      const msg = client.mailbox.take(type);
      if (msg === null) continue;
      if (msg.type === "TrackHeader") attachAudio(msg.audio_url);
      state.applyMessage(msg);
    }

    let clock: number | null = null;
    if (state.mode === "track" || state.mode === "stream") {
      if (audioAttached) {
        clock = audio.currentTime;
      } else {
        localClock += dt;
        clock = localClock;
      }
    }
    state.tick(clock, dt);
    if (state.mode === "idle" && audioAttached && audio.ended) detachAudio();

    drawAvatar(ctx!, state.path(), canvas.width, canvas.height);

    banner.textContent = state.banner ?? "";
    banner.style.display = state.banner === null ? "none" : "block";
    const parts: string[] = [`mode: ${state.mode}`];
    const dom = state.dominant();
    if (dom !== null) parts.push(`mouth: ${dom}`);
    if (state.lastError !== null) {
      parts.push(`server error ${state.lastError.code}: ${state.lastError.message}`);
    }
    if (uiError !== null) parts.push(uiError);
    status.textContent = parts.join("  ·  ");

    requestAnimationFrame(frame);
  }

  client.connect();
  requestAnimationFrame(frame);
}

boot();
