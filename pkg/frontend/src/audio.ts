import type { Bell } from "./types";

// The mistake cue ships as a bundled asset; disabling audio cannot alter
// outcomes because all rules live on the server.
export class AudioBell implements Bell {
  private element: HTMLAudioElement;

  constructor(src = "bell.wav") {
    this.element = new Audio(src);
    this.element.preload = "auto";
  }

  play(): void {
    this.element.currentTime = 0;
    void this.element.play().catch(() => {
      // autoplay restrictions or missing audio device; purely cosmetic
    });
  }
}
