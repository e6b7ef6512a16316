/** Static instructional content for the landing tab. */

export const HOME_HTML = `
<h2>How to use this tool</h2>
<ol>
  <li>Open the <b>Tracking</b> tab. The class list shows everything the
      detector can recognise; narrow it with the first-letter filter and
      tick the classes that matter for your study.</li>
  <li>Press <b>Start tracking</b>. Progress is shown while the detector
      runs; when it finishes, the preview shows the tracked objects with
      green boxes where the fixation point falls inside an AOI, red boxes
      elsewhere, and a purple dot at the fixation itself.</li>
  <li>Open the <b>Labelling</b> tab. It steps through key-frames (frames
      where the set of visible objects changes). Object names are green if
      that AOI held the fixation point and red if it was overlooked; both
      can be given custom labels, e.g. a person's name for a detected
      face, or a correction for a misdetected class.</li>
  <li>Export the per-AOI metrics (time to first fixation, dwell, revisits)
      and the transition matrix from <code>/api/export/</code> or with the
      <code>gaze2aoi</code> CLI.</li>
</ol>
<p>All selected files must belong to the same subject; a red note appears
   on the Tracking tab when they do not. Switching tabs never discards
   selections or unsubmitted labels.</p>
`;
