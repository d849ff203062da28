import { ApiClient } from './api.js';
import { App } from './app.js';
import { CameraSource, DEFAULT_CAPTURE } from './capture.js';
import { speakText } from './speech.js';

const root = document.getElementById('app');
if (root === null) {
  throw new Error('missing #app mount point');
}

new App(root, {
  api: new ApiClient(''),
  frameSource: new CameraSource(DEFAULT_CAPTURE.downscaleTo),
  speak: speakText,
});
