/// Lowercased alphanumeric runs. No stemming and no stopwords, so chemical
/// names like "2-Ethylpyrazine" split into "2" and "ethylpyrazine".
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_punctuation() {
        assert_eq!(
            tokenize("Food: Apple. Molecules: 2-Ethylpyrazine, (E)-2-Hexenal."),
            ["food", "apple", "molecules", "2", "ethylpyrazine", "e", "2", "hexenal"]
        );
        assert!(tokenize(" ,.; ").is_empty());
    }
}
