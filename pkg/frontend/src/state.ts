/** Client view state shared across tabs.
 *
 * The contract: switching tabs never loses anything - selected classes,
 * the key-frame position and labels typed but not yet submitted all stay.
 */

export type Tab = 'home' | 'tracking' | 'labelling';

export class ViewState {
  activeTab: Tab = 'home';
  selectedClassIds = new Set<number>();
  currentKeyframeIndex = 0;
  pendingLabels = new Map<number, string>();
  letterFilter: string | null = null;
  activeJobId: string | null = null;

  switchTab(tab: Tab): void {
    this.activeTab = tab;
  }

  toggleClass(classId: number, selected?: boolean): void {
    const want = selected ?? !this.selectedClassIds.has(classId);
    if (want) {
      this.selectedClassIds.add(classId);
    } else {
      this.selectedClassIds.delete(classId);
    }
  }

  setPendingLabel(trackId: number, text: string): void {
    if (text === '') {
      this.pendingLabels.delete(trackId);
    } else {
      this.pendingLabels.set(trackId, text);
    }
  }

  takePendingLabel(trackId: number): string | undefined {
    const text = this.pendingLabels.get(trackId);
    this.pendingLabels.delete(trackId);
    return text;
  }
}
