/// One line per preset, sorted.
pub fn listing() -> Vec<String> {
    let mut lines: Vec<String> = [
        "initial gaussian(center, width, momentum)  momentum=0",
        "initial periodic-gaussian(center, width, momentum)  momentum=0",
        "initial plane-wave(mode)",
        "initial two-gaussian(separation, width)  angle=pi/4; mixprobe only",
        "modifier modulation(amplitude, mode)  mode=1; phase factor exp(i*amplitude*sin(2*pi*mode*x/L))",
        "potential cosine(amplitude, mode, offset)  mode=1 offset=0",
        "potential file(path)  one value per grid point along an axis",
        "potential harmonic(omega, center)  center=L/2",
        "potential none",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    lines.sort();
    lines
}
