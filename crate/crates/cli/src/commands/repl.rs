//! `rwnet repl`: interactive derivation authoring. The user steps through
//! a question by picking applicable actions by number, letting search
//! finish the derivation (`auto`), steering it through intermediate
//! expressions (`subgoal`), and saving the result as a replayable scheme.

use std::fs;
use std::io::{self, BufRead, Write};

use anyhow::{anyhow, Context};
use rwnet_core::rule::{apply_rule_at, FreshCounter, RuleSet};
use rwnet_core::scheme::{replay, write_schemes, Scheme, Step};
use rwnet_core::search::{bfs_search_goal, SearchLimits};
use rwnet_core::term::Term;

use crate::config::ExperimentConfig;
use crate::{provenance, CliError, CliResult};

const HELP: &str = "\
commands:
  <number>         apply that action to the current term
  auto             search for a derivation from here to the solved form
  subgoal <expr>   search for a derivation from here to the given term
  undo             take back the most recent step
  save             record question, steps, and answer as a scheme
  help             show this message
  quit             leave (also: exit, or end of input)";

struct Session<'a> {
    rs: &'a RuleSet,
    question: Term,
    current: Term,
    steps: Vec<Step>,
    /// Term and fresh-constant count before each step, for undo.
    trail: Vec<(Term, usize)>,
    fresh: FreshCounter,
    /// Rules that introduce fresh variables diverge under search, so
    /// `auto` and `subgoal` skip them; they stay available manually.
    search_excluded: Vec<String>,
    limits: SearchLimits,
    saved: Vec<Scheme>,
}

impl<'a> Session<'a> {
    fn new(rs: &'a RuleSet, question: Term) -> Self {
        let search_excluded = rs
            .rules()
            .iter()
            .filter(|r| r.introduces_fresh())
            .map(|r| r.name().to_string())
            .collect();
        Session {
            rs,
            current: question.clone(),
            question,
            steps: Vec::new(),
            trail: Vec::new(),
            fresh: FreshCounter::new(),
            search_excluded,
            limits: SearchLimits::default(),
            saved: Vec::new(),
        }
    }

    fn append_searched(&mut self, found: Scheme) {
        let added = found.steps.len();
        for step in found.steps {
            self.trail.push((self.current.clone(), self.fresh.used()));
            self.current = step.target.clone();
            self.steps.push(step);
        }
        println!("search added {added} steps");
    }

    fn apply_numbered(&mut self, choice: usize, actions: &[(usize, rwnet_core::term::Position)]) {
        let (rule_index, position) = &actions[choice - 1];
        let rule = self.rs.rule(*rule_index);
        let before = self.fresh.used();
        match apply_rule_at(&self.current, rule, position, &mut self.fresh) {
            Ok(next) => {
                self.trail.push((self.current.clone(), before));
                self.steps.push(Step {
                    source: self.current.clone(),
                    rule_name: rule.name().to_string(),
                    position: position.clone(),
                    target: next.clone(),
                });
                self.current = next;
            }
            Err(e) => println!("cannot apply {}: {e}", rule.name()),
        }
    }

    fn undo(&mut self) {
        match self.trail.pop() {
            Some((term, fresh_used)) => {
                self.steps.pop();
                self.current = term;
                self.fresh = FreshCounter::starting_after(fresh_used);
                println!("undid one step");
            }
            None => println!("nothing to undo"),
        }
    }

    fn save(&mut self, cfg: &ExperimentConfig) -> CliResult<()> {
        let scheme = Scheme {
            question: self.question.clone(),
            steps: self.steps.clone(),
            answer: self.current.clone(),
        };
        if !replay(&scheme, self.rs).is_pass() {
            return Err(CliError::Runtime(anyhow!(
                "authored scheme failed replay validation; this is a bug"
            )));
        }
        self.saved.push(scheme);
        fs::create_dir_all(&cfg.out)
            .with_context(|| format!("cannot create {}", cfg.out.display()))?;
        let path = cfg.out.join("authored.jsonl");
        let mut buffer = Vec::new();
        write_schemes(&mut buffer, &self.saved).context("cannot serialize schemes")?;
        fs::write(&path, buffer).with_context(|| format!("cannot write {}", path.display()))?;
        provenance::write(&cfg.out, "repl", cfg)?;
        println!(
            "saved scheme {} ({} steps) to {}",
            self.saved.len(),
            self.steps.len(),
            path.display()
        );
        Ok(())
    }
}

pub fn run(cfg: &ExperimentConfig, expr: &str) -> CliResult<()> {
    let rs = super::load_rules(cfg)?;
    let question = Term::parse(expr).map_err(|e| CliError::usage(anyhow!("{e}")))?;
    let mut session = Session::new(&rs, question);
    let goal = rs.goal().clone();

    let stdin = io::stdin();
    let mut lines = stdin.lock().lines();
    loop {
        println!();
        if goal.is_solved(&session.current) {
            println!("{}   (solved)", session.current);
        } else {
            println!("{}", session.current);
        }
        let actions = rs.applicable_actions(&session.current);
        if actions.is_empty() {
            println!("  (no applicable actions)");
        }
        for (i, (rule_index, position)) in actions.iter().enumerate() {
            println!("  [{}] {} @ {}", i + 1, rs.rule(*rule_index).name(), position);
        }
        print!("> ");
        io::stdout().flush().context("cannot flush stdout")?;

        let Some(line) = lines.next() else { break };
        let line = line.context("cannot read input")?;
        let line = line.trim();
        match line {
            "" => continue,
            "quit" | "exit" => break,
            "help" => println!("{HELP}"),
            "undo" => session.undo(),
            "auto" => {
                let result = bfs_search_goal(
                    &session.current,
                    &rs,
                    &session.limits,
                    &session.search_excluded,
                    &|t| goal.is_solved(t),
                );
                match result {
                    Ok(found) if found.steps.is_empty() => println!("already solved"),
                    Ok(found) => session.append_searched(found),
                    Err(e) => println!("search failed: {e}"),
                }
            }
            "save" => session.save(cfg)?,
            _ => {
                if let Some(rest) = line.strip_prefix("subgoal") {
                    let rest = rest.trim();
                    if rest.is_empty() {
                        println!("usage: subgoal <expression>");
                        continue;
                    }
                    let target = match Term::parse(rest) {
                        Ok(t) => t,
                        Err(e) => {
                            println!("cannot parse subgoal: {e}");
                            continue;
                        }
                    };
                    if target == session.current {
                        println!("already at that subgoal");
                        continue;
                    }
                    let result = bfs_search_goal(
                        &session.current,
                        &rs,
                        &session.limits,
                        &session.search_excluded,
                        &|t| *t == target,
                    );
                    match result {
                        Ok(found) => session.append_searched(found),
                        Err(e) => println!("subgoal unreachable: {e} (state unchanged)"),
                    }
                    continue;
                }
                match line.parse::<usize>() {
                    Ok(choice) if (1..=actions.len()).contains(&choice) => {
                        session.apply_numbered(choice, &actions);
                    }
                    _ => println!(
                        "pick an action number (1..{}) or auto, subgoal <expr>, undo, save, help, quit",
                        actions.len()
                    ),
                }
            }
        }
    }
    Ok(())
}
