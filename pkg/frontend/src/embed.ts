/**
 * Embed command API: a host page that iframes the viewer drives it with
 * `postMessage`. Commands are tagged `type: "avatar"` so unrelated
 * postMessage traffic on the page passes through untouched; a tagged
 * message with an unknown or malformed command is logged with
 * console.warn and dropped — embed input must never throw into the host.
 *
 * Commands:
 *   {type:"avatar", command:"speak",      wav_url}
 *   {type:"avatar", command:"playTrack",  track_url, audio_url?}
 *   {type:"avatar", command:"setProfile", profile_id}
 */

export const EMBED_TYPE = "avatar";

export interface EmbedHandlers {
  /** Fetch a WAV and run it through the analysis service (baked playback). */
  speak(wavUrl: string): void | Promise<void>;
  /** Play a pre-baked `.viseme.json` track, optionally with its audio. */
  playTrack(trackUrl: string, audioUrl: string | null): void | Promise<void>;
  setProfile(profileId: string): void;
}

function field(data: Record<string, unknown>, name: string): string | null {
  const value = data[name];
  return typeof value === "string" && value.length > 0 ? value : null;
}

/**
 * Interpret one postMessage payload. Returns true when the message was an
 * avatar command (valid or not); false means it was not addressed to us.
 */
export function handleEmbedCommand(data: unknown, handlers: EmbedHandlers): boolean {
  if (typeof data !== "object" || data === null || Array.isArray(data)) return false;
  const msg = data as Record<string, unknown>;
  if (msg.type !== EMBED_TYPE) return false;

  const command = msg.command;
  try {
    switch (command) {
      case "speak": {
        const wavUrl = field(msg, "wav_url");
        if (wavUrl === null) {
          console.warn("avatar embed: speak needs a wav_url string", data);
          return true;
        }
        void handlers.speak(wavUrl);
        return true;
      }
      case "playTrack": {
        const trackUrl = field(msg, "track_url");
        if (trackUrl === null) {
          console.warn("avatar embed: playTrack needs a track_url string", data);
          return true;
        }
        void handlers.playTrack(trackUrl, field(msg, "audio_url"));
        return true;
      }
      case "setProfile": {
        const profileId = field(msg, "profile_id");
        if (profileId === null) {
          console.warn("avatar embed: setProfile needs a profile_id string", data);
          return true;
        }
        handlers.setProfile(profileId);
        return true;
      }
      default:
        console.warn(`avatar embed: unknown command ${JSON.stringify(command)}`, data);
        return true;
    }
  } catch (e) {
    // a throwing handler must not propagate into the host page
    console.warn("avatar embed: command handler failed", e);
    return true;
  }
}

/** Wire the command handler to a window; returns a detach function. */
export function attachEmbedApi(
  handlers: EmbedHandlers,
  target: Pick<Window, "addEventListener" | "removeEventListener"> = window,
): () => void {
  const listener = (event: MessageEvent) => {
    handleEmbedCommand(event.data, handlers);
  };
  target.addEventListener("message", listener as EventListener);
  return () => target.removeEventListener("message", listener as EventListener);
}
