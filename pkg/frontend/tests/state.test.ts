import { describe, expect, it } from 'vitest';

import { ViewState } from '../src/state.js';

describe('ViewState', () => {
  it('preserves all fields across tab switches', () => {
    const state = new ViewState();
    state.toggleClass(3);
    state.toggleClass(7);
    state.currentKeyframeIndex = 4;
    state.setPendingLabel(1, 'Alice');
    state.letterFilter = 'H';

    state.switchTab('tracking');
    state.switchTab('labelling');
    state.switchTab('home');

    expect([...state.selectedClassIds].sort()).toEqual([3, 7]);
    expect(state.currentKeyframeIndex).toBe(4);
    expect(state.pendingLabels.get(1)).toBe('Alice');
    expect(state.letterFilter).toBe('H');
  });

  it('toggleClass flips and honours explicit values', () => {
    const state = new ViewState();
    state.toggleClass(5);
    expect(state.selectedClassIds.has(5)).toBe(true);
    state.toggleClass(5);
    expect(state.selectedClassIds.has(5)).toBe(false);
    state.toggleClass(5, true);
    state.toggleClass(5, true);
    expect(state.selectedClassIds.has(5)).toBe(true);
  });

  it('clears pending labels on empty text', () => {
    const state = new ViewState();
    state.setPendingLabel(2, 'Oven');
    state.setPendingLabel(2, '');
    expect(state.pendingLabels.has(2)).toBe(false);
  });

  it('takePendingLabel removes the entry', () => {
    const state = new ViewState();
    state.setPendingLabel(2, 'Oven');
    expect(state.takePendingLabel(2)).toBe('Oven');
    expect(state.pendingLabels.has(2)).toBe(false);
  });
});
