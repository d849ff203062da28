/**
 * Speech output wrapper. Returns whether the platform actually spoke, so
 * the UI can fall back to showing the text prominently.
 */

export type Speaker = (text: string) => boolean;

export const speakText: Speaker = (text) => {
  if (typeof speechSynthesis === 'undefined') {
    return false;
  }
  speechSynthesis.speak(new SpeechSynthesisUtterance(text));
  return true;
};
