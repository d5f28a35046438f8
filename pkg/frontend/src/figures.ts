/** The five figure definitions: which experiment and metric each one plots. */

export interface FigureSpec {
  id: string;
  experiment: string;
  metric: "profit" | "cost";
  title: string;
  xLabel: string;
  yLabel: string;
}

export const FIGURES: Record<string, FigureSpec> = {
  fig5: {
    id: "fig5",
    experiment: "scale",
    metric: "profit",
    title: "Profit vs workflow count",
    xLabel: "number of workflows",
    yLabel: "profit",
  },
  fig6: {
    id: "fig6",
    experiment: "spot_density",
    metric: "profit",
    title: "Profit vs spot instance density",
    xLabel: "spot availability fraction",
    yLabel: "profit",
  },
  fig7: {
    id: "fig7",
    experiment: "price_ratio",
    metric: "profit",
    title: "Profit vs demand-to-reserve price ratio",
    xLabel: "on-demand / reserved price ratio",
    yLabel: "profit",
  },
  fig8: {
    id: "fig8",
    experiment: "pred_error",
    metric: "profit",
    title: "Profit vs arrival-prediction error",
    xLabel: "prediction error sigma (fraction of critical-path time)",
    yLabel: "profit",
  },
  fig9: {
    id: "fig9",
    experiment: "reserved_prob",
    metric: "cost",
    title: "Renting cost vs reserved probability (lower is better)",
    xLabel: "reserved probability",
    yLabel: "total renting cost",
  },
};

export function figureSpec(figure: string): FigureSpec {
  const spec = FIGURES[figure];
  if (!spec) {
    throw new Error(
      `unknown figure "${figure}"; expected one of ${Object.keys(FIGURES).join(", ")}`,
    );
  }
  return spec;
}
