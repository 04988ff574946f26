/// `num / den` as a decimal with exactly `digits` fractional digits,
/// rounded half-up using integer arithmetic. `den == 0` renders as zero.
pub(crate) fn ratio_decimal(num: u64, den: u64, digits: u32) -> String {
    if den == 0 {
        return format!("{:.*}", digits as usize, 0.0);
    }
    let scale = 10u128.pow(digits);
    let scaled = (2 * num as u128 * scale + den as u128) / (2 * den as u128);
    let int = scaled / scale;
    let frac = scaled % scale;
    if digits == 0 {
        int.to_string()
    } else {
        format!("{int}.{frac:0width$}", width = digits as usize)
    }
}
