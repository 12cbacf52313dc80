//! Calendar dates in fixed numeric layouts such as `MM/DD/YY` or `DD-MM-YYYY`.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Date {
    pub year: i32,
    pub month: u32,
    pub day: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DateError {
    /// The format string itself is malformed.
    Format(String),
    /// The text does not match the format or is not a real date.
    Value(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Day,
    Month,
    Year2,
    Year4,
    Sep(char),
}

fn fields(format: &str) -> Result<Vec<Field>, DateError> {
    let mut out = Vec::new();
    let mut rest = format;
    while !rest.is_empty() {
        let (f, n) = if rest.starts_with("YYYY") {
            (Field::Year4, 4)
        } else if rest.starts_with("YY") {
            (Field::Year2, 2)
        } else if rest.starts_with("MM") {
            (Field::Month, 2)
        } else if rest.starts_with("DD") {
            (Field::Day, 2)
        } else {
            let c = rest.chars().next().unwrap();
            if c.is_ascii_alphanumeric() {
                return Err(DateError::Format(format!("unknown field in {format:?}")));
            }
            (Field::Sep(c), c.len_utf8())
        };
        out.push(f);
        rest = &rest[n..];
    }
    let count = |want: &[Field]| out.iter().filter(|f| want.contains(f)).count();
    if count(&[Field::Day]) != 1 || count(&[Field::Month]) != 1 || count(&[Field::Year2, Field::Year4]) != 1 {
        return Err(DateError::Format(format!("{format:?} needs one day, month and year field")));
    }
    Ok(out)
}

fn days_in_month(year: i32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
        2 => 28,
        _ => 0,
    }
}

/// Two-digit years 00..=68 map to 20xx, 69..=99 to 19xx.
fn expand_year(yy: i32) -> i32 {
    if yy <= 68 {
        2000 + yy
    } else {
        1900 + yy
    }
}

pub fn parse_date(text: &str, format: &str) -> Result<Date, DateError> {
    let fields = fields(format)?;
    let bad = || DateError::Value(format!("{text:?} does not match {format:?}"));
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let (mut day, mut month, mut year) = (0u32, 0u32, 0i32);
    for f in fields {
        let mut digits = |n: usize| -> Result<u32, DateError> {
            let slice = chars.get(i..i + n).ok_or_else(bad)?;
            if !slice.iter().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            i += n;
            Ok(slice.iter().fold(0, |acc, c| acc * 10 + c.to_digit(10).unwrap()))
        };
        match f {
            Field::Day => day = digits(2)?,
            Field::Month => month = digits(2)?,
            Field::Year2 => year = expand_year(digits(2)? as i32),
            Field::Year4 => year = digits(4)? as i32,
            Field::Sep(c) => {
                if chars.get(i) != Some(&c) {
                    return Err(bad());
                }
                i += 1;
            }
        }
    }
    if i != chars.len() || !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
        return Err(bad());
    }
    Ok(Date { year, month, day })
}

pub fn format_date(date: Date, format: &str) -> Result<String, DateError> {
    let mut out = String::new();
    for f in fields(format)? {
        match f {
            Field::Day => out.push_str(&format!("{:02}", date.day)),
            Field::Month => out.push_str(&format!("{:02}", date.month)),
            Field::Year2 => out.push_str(&format!("{:02}", date.year.rem_euclid(100))),
            Field::Year4 => out.push_str(&format!("{:04}", date.year)),
            Field::Sep(c) => out.push(c),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_layouts() {
        let d = parse_date("07/24/79", "MM/DD/YY").unwrap();
        assert_eq!(d, Date { year: 1979, month: 7, day: 24 });
        assert_eq!(format_date(d, "DD-MM-YYYY").unwrap(), "24-07-1979");
        assert_eq!(parse_date("29-02-2000", "DD-MM-YYYY").unwrap().day, 29);
        assert!(parse_date("29-02-1900", "DD-MM-YYYY").is_err());
        assert!(parse_date("24/07/79", "MM/DD/YY").is_err());
        assert!(parse_date("07/24/79x", "MM/DD/YY").is_err());
        assert!(matches!(parse_date("07/24/79", "QQ"), Err(DateError::Format(_))));
        assert_eq!(parse_date("01/01/05", "DD/MM/YY").unwrap().year, 2005);
    }
}
