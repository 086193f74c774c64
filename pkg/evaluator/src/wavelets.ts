/**
 * Filter banks for the five supported wavelet families.
 *
 * Each filter carries its support offset `lo` so symmetric biorthogonal
 * filters can be centered at zero while orthogonal ones start at zero.
 * Lowpass filters are sqrt(2)-normalized; highpass filters are derived by
 * modulation in dwt.ts.
 */

export interface Filt {
  /** index of taps[0] (may be negative for centered filters) */
  lo: number;
  taps: Float64Array;
}

export interface FilterBank {
  name: string;
  /** analysis lowpass */
  decLo: Filt;
  /** synthesis lowpass */
  recLo: Filt;
  orthogonal: boolean;
}

const DB6 = [
  0.11154074335010924, 0.49462389039845295, 0.7511339080210979,
  0.31525035170920335, -0.2262646939654362, -0.12976686756726596,
  0.09750160558731803, 0.027522865530303833, -0.031582039317486155,
  0.0005538422011613518, 0.0047772575109454535, -0.001077301085308464,
];

const SYM6 = [
  0.015404109327042472, 0.003490712084214704, -0.11799011114851782,
  -0.04831174258566396, 0.49105594192801383, 0.7876411410286464,
  0.337929421728129, -0.07263752278639614, -0.02106029251237069,
  0.04472490177078041, 0.0017677118642507592, -0.007800708325033446,
];

const COIF6 = [
  2.657806282251338e-6, -6.468335956114584e-6, -7.959625856462639e-5,
  0.00019983935750743232, 0.0007535613789909724, -0.0021547508416077717,
  -0.0038030033258286957, 0.013517817143764103, 0.012203553320113568,
  -0.06371861069765762, -0.02706513893408233, 0.36896280372844525,
  0.7504766645667905, 0.5057209391046407, -0.05140646703278094,
  -0.16707729990185285, 0.04551890974838715, 0.07209612487474226,
  -0.030095188953955472, -0.026692189642494774, 0.014719949460858476,
  0.007689276151595918, -0.005241827740670626, -0.0017002146549350363,
  0.0013382536212155458, 0.0003231115528306658, -0.00024711628486131723,
  -6.396536861346781e-5, 3.539699192111588e-5, 1.1728419569700137e-5,
  -4.123805816909538e-6, -1.4770544090572566e-6, 3.0828303393063287e-7,
  1.2213966483843634e-7, -1.1654484982776568e-8, -4.7886865548166504e-9,
];

const BIOR68_DEC = [
  0.0019088317364850226, -0.0019142861290808836, -0.01699063986760707,
  0.011934565279726717, 0.04973290349093774, -0.07726317316721092,
  -0.09405920349576105, 0.4207962846098395, 0.8259229974584379,
  0.4207962846098387, -0.09405920349576094, -0.0772631731672109,
  0.049732903490937584, 0.011934565279726696, -0.01699063986760707,
  -0.0019142861290808836, 0.0019088317364850226,
];

const BIOR68_REC = [
  0.01442628250562228, 0.014467504896774128, -0.07872200106266897,
  -0.04036797903038223, 0.41784910915032053, 0.7589077294537636,
  0.41784910915032053, -0.040367979030382264, -0.07872200106266897,
  0.014467504896774128, 0.01442628250562228,
];

function causal(taps: number[]): Filt {
  return { lo: 0, taps: Float64Array.from(taps) };
}

function centered(taps: number[]): Filt {
  return { lo: -((taps.length - 1) >> 1), taps: Float64Array.from(taps) };
}

function orthogonalBank(name: string, taps: number[]): FilterBank {
  return { name, decLo: causal(taps), recLo: causal(taps), orthogonal: true };
}

const BANKS: Record<string, FilterBank> = {
  db6: orthogonalBank("db6", DB6),
  sym6: orthogonalBank("sym6", SYM6),
  coif6: orthogonalBank("coif6", COIF6),
  "bior6.8": {
    name: "bior6.8",
    decLo: centered(BIOR68_DEC),
    recLo: centered(BIOR68_REC),
    orthogonal: false,
  },
  "rbio6.8": {
    name: "rbio6.8",
    decLo: centered(BIOR68_REC),
    recLo: centered(BIOR68_DEC),
    orthogonal: false,
  },
};

export const WAVELET_NAMES = Object.keys(BANKS);

export function waveletByName(name: string): FilterBank | undefined {
  return BANKS[name];
}
