/** HTML renderers: pure string builders over the view-model, so tests can
 *  assert on displayed values without a browser.  Actions are wired by
 *  data-action attributes and a single delegated listener in app.ts. */

import type { SessionView } from './model.js';

export function escapeHtml(text: string): string {
    return text
        .replace(/&/g, '&amp;')
        .replace(/</g, '&lt;')
        .replace(/>/g, '&gt;')
        .replace(/"/g, '&quot;');
}

export function renderWizard(error: string | null): string {
    return `
<section class="wizard" data-panel="wizard">
  <h1>New audit session</h1>
  ${error ? `<p class="error" data-field="wizard-error">${escapeHtml(error)}</p>` : ''}
  <form data-action="create-session">
    <fieldset>
      <legend>Risk limit and draw seed</legend>
      <label>alpha <input name="alpha" value="0.05" required></label>
      <label>seed <input name="seed" value="1" required></label>
      <label>stopping constant
        <select name="beta_source">
          <option value="table">reference table</option>
          <option value="formula">fitted formula</option>
          <option value="formula_upper">upper-bound formula</option>
          <option value="manual">manual</option>
        </select>
      </label>
      <label>manual beta <input name="beta" placeholder="only for manual"></label>
    </fieldset>
    <fieldset>
      <legend>Ballots</legend>
      <label><input type="radio" name="mode" value="synthetic" checked> synthetic profile</label>
      <label>counts <input name="counts" value="alice:6,bob:4" title="candidate:count, comma separated"></label>
      <label>contest id <input name="contest_id" value="contest-1"></label>
      <label><input type="radio" name="mode" value="manifest"> manifest upload</label>
      <label>manifest CSV <textarea name="manifest_csv" rows="4" placeholder="ballot_id,contest_id,choice"></textarea></label>
      <label>contest declarations (JSON) <textarea name="contests_json" rows="4" placeholder='[{"contest_id": ...}]'></textarea></label>
    </fieldset>
    <button type="submit" data-field="create-button">Create session</button>
  </form>
</section>`;
}

export function renderSession(view: SessionView): string {
    return `
<section class="session" data-panel="session" data-session-id="${escapeHtml(view.sessionId)}">
  <header>
    <h1>Audit session ${escapeHtml(view.sessionId)}</h1>
    <p class="params">
      alpha <span data-field="alpha">${view.alpha}</span>
      | seed <span data-field="seed">${view.seed}</span>
      | ballots examined <span data-field="drawn-count">${view.drawnCount}</span>
    </p>
    <p class="verdict verdict-${view.verdictKind}" data-field="verdict" data-verdict="${view.verdictKind}">
      ${escapeHtml(view.verdictLabel)}
    </p>
  </header>
  ${renderEntryPanel(view)}
  ${view.groups.map(renderContestGroup).join('\n')}
  <section class="log">
    <h2>Recent draws</h2>
    <ol data-field="draw-log">
      ${view.recentDraws
          .map(
              (d) =>
                  `<li><code>${escapeHtml(d.ballotId)}</code> ${escapeHtml(d.marks)}</li>`,
          )
          .join('\n')}
    </ol>
  </section>
</section>`;
}

function renderEntryPanel(view: SessionView): string {
    if (view.finished || view.next === null) {
        return `
<section class="entry entry-disabled" data-panel="entry">
  <h2>Ballot entry</h2>
  <p data-field="entry-disabled">Entry closed: ${escapeHtml(view.verdictLabel)}</p>
</section>`;
    }
    const next = view.next;
    return `
<section class="entry" data-panel="entry">
  <h2>Ballot entry</h2>
  <p>Retrieve ballot <strong data-field="next-ballot">${escapeHtml(next.ballotId)}</strong>
     (draw <span data-field="next-sequence">${next.sequenceNo}</span>) and enter the voter's
     choice for: ${next.contests.map((c) => `<code>${escapeHtml(c)}</code>`).join(', ')}</p>
  <div class="choices">
    ${view.entryOptions
        .map(
            (option) => `
    <button data-action="submit-choice" data-choice="${escapeHtml(option.choice)}"
            data-hotkey="${option.hotkey}">
      <kbd>${option.hotkey}</kbd> ${escapeHtml(option.label)}
    </button>`,
        )
        .join('\n')}
  </div>
</section>`;
}

function renderContestGroup(group: {
    contestId: string;
    state: string;
    rows: SessionView['groups'][number]['rows'];
    fullCountLabel: string | null;
}): string {
    const dimmed = group.state !== 'active' ? ' contest-closed' : '';
    return `
<section class="contest${dimmed}" data-contest="${escapeHtml(group.contestId)}" data-state="${group.state}">
  <h2>${escapeHtml(group.contestId)} <span class="state">[${group.state}]</span></h2>
  ${group.fullCountLabel ? `<p data-field="full-count">${escapeHtml(group.fullCountLabel)}</p>` : ''}
  <table>
    <thead>
      <tr><th>pair</th><th>winner votes</th><th>loser votes</th><th>margin</th>
          <th>threshold</th><th>beta</th><th>progress</th><th>state</th></tr>
    </thead>
    <tbody>
      ${group.rows.map(renderSubauditRow).join('\n')}
    </tbody>
  </table>
</section>`;
}

function renderSubauditRow(row: SessionView['groups'][number]['rows'][number]): string {
    const pct = Math.round(row.progress * 100);
    return `
<tr data-subaudit="${escapeHtml(row.winner)}>${escapeHtml(row.loser)}" data-state="${row.state}">
  <td>${escapeHtml(row.winner)} &gt; ${escapeHtml(row.loser)}</td>
  <td data-field="winner-votes">${row.winnerVotes}</td>
  <td data-field="loser-votes">${row.loserVotes}</td>
  <td data-field="margin">${row.margin}</td>
  <td data-field="threshold">${escapeHtml(row.threshold)}</td>
  <td data-field="beta">${escapeHtml(row.beta)}</td>
  <td><div class="bar"><div class="bar-fill" data-field="progress" style="width: ${pct}%">${pct}%</div></div></td>
  <td><span class="badge badge-${row.state}" data-field="state">${row.state}</span></td>
</tr>`;
}
