//! gnuplot scripts that read the CSV next to them by relative path.

fn preamble(title: &str, output: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set terminal pngcairo size 900,600\n\
         set output '{output}'\n\
         set title '{title}'\n\
         set grid\n\
         set key outside right\n"
    )
}

/// One line per label, selecting rows whose column `label_col` equals it.
fn series_plot(csv: &str, label_col: usize, x: usize, y: usize, labels: &[String], style: &str) -> String {
    let parts: Vec<String> = labels
        .iter()
        .map(|l| format!("'{csv}' every ::1 using {x}:(strcol({label_col}) eq '{l}' ? ${y} : 1/0) with {style} title '{l}'"))
        .collect();
    format!("plot {}\n", parts.join(", \\\n     "))
}

pub fn outage(csv: &str, schemes: &[String]) -> String {
    format!(
        "{}set logscale y\nset xlabel 'SNR [dB]'\nset ylabel 'outage probability'\n{}",
        preamble("Outage probability", "outage.png"),
        series_plot(csv, 2, 1, 3, schemes, "linespoints")
    )
}

pub fn cdf(csv: &str, schemes: &[String]) -> String {
    format!(
        "{}set xlabel 'bits per complex symbol'\nset ylabel 'CDF'\n{}",
        preamble("Empirical CDF", "cdf.png"),
        series_plot(csv, 2, 3, 4, schemes, "steps")
    )
}

pub fn relay_ser(csv: &str, series: &[(String, String)]) -> String {
    let parts: Vec<String> = series
        .iter()
        .map(|(s, b)| {
            format!(
                "'{csv}' every ::1 using 1:(strcol(2) eq '{s}' && strcol(3) eq '{b}' ? $4 : 1/0) with linespoints title '{s} b={b}'"
            )
        })
        .collect();
    format!(
        "{}set logscale y\nset xlabel 'SNR [dB]'\nset ylabel 'symbol error rate'\nplot {}\n",
        preamble("Relay 16-QAM SER", "relay-ser.png"),
        parts.join(", \\\n     ")
    )
}

pub fn subnyquist(csv: &str, receivers: &[String], dictionary_csv: &str) -> String {
    format!(
        "{}set logscale y\nset xlabel 'SNR [dB]'\nset ylabel 'symbol error rate'\n{}\
         set output 'dictionary.png'\nunset logscale y\nset title 'Pulse dictionary (tap magnitudes)'\n\
         set xlabel 'tap'\nset ylabel '|h|'\n\
         plot '{dictionary_csv}' every ::1 using (column(1)*5+column(2)):5 with impulses title ''\n",
        preamble("Sub-Nyquist acquisition", "subnyquist.png"),
        series_plot(csv, 2, 1, 3, receivers, "linespoints")
    )
}

pub fn asymptotics(csv: &str) -> String {
    let series = [
        "predicted-exp4",
        "predicted-exp2",
        "universal-vs-opt",
        "half-power-vs-opt",
    ]
    .map(String::from);
    format!(
        "{}set xlabel 'SNR [dB]'\nset ylabel 'outage ratio'\n{}",
        preamble("Two-user outage ratios", "asymptotics.png"),
        series_plot(csv, 1, 2, 3, &series, "linespoints")
    )
}

pub fn selftest(csv: &str) -> String {
    format!(
        "{}set style data histograms\nset ylabel 'passed'\nplot '{csv}' every ::1 using (strcol(3) eq 'true' ? 1 : 0):xtic(2) title ''\n",
        preamble("Self-test", "selftest.png")
    )
}
