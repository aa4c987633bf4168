//! Output-prediction prompt. The template is ours and versioned; the version
//! string is stored on every collected record.

use execlens_core::corpus::Problem;
use execlens_core::scoring::ANSWER_MARKER;

pub const PROMPT_TEMPLATE_VERSION: &str = "output-prediction/v1";

pub fn build_prompt(problem: &Problem) -> String {
    let input = if problem.input_text.is_empty() {
        "(no input)\n".to_string()
    } else if problem.input_text.ends_with('\n') {
        problem.input_text.clone()
    } else {
        format!("{}\n", problem.input_text)
    };
    let source = problem.source.trim_end_matches('\n');
    format!(
        "Below is a Python program and the text it receives on standard input.\n\
         Predict exactly what the program prints.\n\
         \n\
         [Program]\n\
         ```python\n\
         {source}\n\
         ```\n\
         \n\
         [Input]\n\
         {input}\n\
         You may reason step by step first. End your reply with a line containing only \
         {ANSWER_MARKER}, followed by the predicted output and nothing else.\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn listing() -> Problem {
        Problem {
            benchmark_id: "fixture".into(),
            problem_id: "p01".into(),
            source: "n = int(input())\nl = int(input())\nprint(n + l)\n".into(),
            input_text: "10\n-3\n".into(),
            expected_output: "7\n".into(),
        }
    }

    #[test]
    fn contains_source_input_and_marker_instruction() {
        let p = listing();
        let prompt = build_prompt(&p);
        assert!(prompt.contains(&p.source));
        assert!(prompt.contains("[Input]\n10\n-3\n"));
        assert!(prompt.contains("containing only [Output]"));
        assert_eq!(prompt, build_prompt(&listing()));
    }

    #[test]
    fn empty_input_is_spelled_out() {
        let mut p = listing();
        p.input_text.clear();
        assert!(build_prompt(&p).contains("[Input]\n(no input)\n"));
    }
}
