import { SessionClient } from './api.js';
import { App, rememberedSession } from './app.js';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app element');

const app = new App(root, new SessionClient(window.location.origin));

document.addEventListener('keydown', (ev) => {
    if (ev.target instanceof HTMLInputElement || ev.target instanceof HTMLTextAreaElement) {
        return;
    }
    if (/^[0-9]$/.test(ev.key)) {
        app.pressKey(ev.key);
    }
});

const resume = rememberedSession();
if (resume) {
    void app.start(resume);
}
app.startPolling();
