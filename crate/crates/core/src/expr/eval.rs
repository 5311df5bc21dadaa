use num_traits::ToPrimitive;

use super::{Expr, ExprError, Func};

/// Evaluate at `p` (coordinates `x1..xn` in order) in binary64.
pub fn evaluate(e: &Expr, p: &[f64]) -> Result<f64, ExprError> {
    let dim = e.max_var();
    if p.len() < dim {
        return Err(ExprError::PointDimension {
            expected: dim,
            got: p.len(),
        });
    }
    eval_tree(e, p)
}

fn eval_tree(e: &Expr, p: &[f64]) -> Result<f64, ExprError> {
    Ok(match e {
        Expr::Const(c) => c.to_f64().unwrap_or(f64::NAN),
        Expr::Var(i) => p[*i - 1],
        Expr::Add(a, b) => eval_tree(a, p)? + eval_tree(b, p)?,
        Expr::Mul(a, b) => eval_tree(a, p)? * eval_tree(b, p)?,
        Expr::Neg(a) => -eval_tree(a, p)?,
        Expr::Div(a, b) => {
            let den = eval_tree(b, p)?;
            if den == 0.0 {
                return Err(domain(e, "division by zero"));
            }
            eval_tree(a, p)? / den
        }
        Expr::Pow(a, n) => eval_tree(a, p)?.powi(*n as i32),
        Expr::Call(f, a) => {
            let v = eval_tree(a, p)?;
            match f {
                Func::Exp => v.exp(),
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(domain(e, "square root of a negative number"));
                    }
                    v.sqrt()
                }
            }
        }
    })
}

fn domain(e: &Expr, reason: &str) -> ExprError {
    ExprError::Domain {
        subexpr: e.to_string(),
        reason: reason.to_string(),
    }
}

#[derive(Clone, Debug)]
enum Op {
    Const(f64),
    Var(usize),
    Add,
    Mul,
    Neg,
    /// Index into `Compiled::sources` for error reporting.
    Div(usize),
    Powi(i32),
    Call(Func, usize),
}

/// Stack-machine form of an [`Expr`] with constants pre-converted to
/// binary64; used on every hot numeric path.
#[derive(Clone, Debug)]
pub struct Compiled {
    ops: Vec<Op>,
    sources: Vec<Expr>,
    depth: usize,
}

impl Compiled {
    pub fn new(e: &Expr) -> Compiled {
        let mut c = Compiled {
            ops: Vec::new(),
            sources: Vec::new(),
            depth: 0,
        };
        let mut depth = 0;
        c.emit(e, &mut depth);
        c
    }

    fn push(&mut self, op: Op, depth: &mut usize, delta: isize) {
        self.ops.push(op);
        *depth = (*depth as isize + delta) as usize;
        self.depth = self.depth.max(*depth);
    }

    fn emit(&mut self, e: &Expr, depth: &mut usize) {
        match e {
            Expr::Const(c) => self.push(Op::Const(c.to_f64().unwrap_or(f64::NAN)), depth, 1),
            Expr::Var(i) => self.push(Op::Var(*i - 1), depth, 1),
            Expr::Add(a, b) => {
                self.emit(a, depth);
                self.emit(b, depth);
                self.push(Op::Add, depth, -1);
            }
            Expr::Mul(a, b) => {
                self.emit(a, depth);
                self.emit(b, depth);
                self.push(Op::Mul, depth, -1);
            }
            Expr::Div(a, b) => {
                self.emit(a, depth);
                self.emit(b, depth);
                self.sources.push(e.clone());
                self.push(Op::Div(self.sources.len() - 1), depth, -1);
            }
            Expr::Neg(a) => {
                self.emit(a, depth);
                self.push(Op::Neg, depth, 0);
            }
            Expr::Pow(a, n) => {
                self.emit(a, depth);
                self.push(Op::Powi(*n as i32), depth, 0);
            }
            Expr::Call(f, a) => {
                self.emit(a, depth);
                self.sources.push(e.clone());
                self.push(Op::Call(*f, self.sources.len() - 1), depth, 0);
            }
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64, ExprError> {
        const INLINE: usize = 32;
        if self.depth <= INLINE {
            self.run(p, &mut [0.0; INLINE])
        } else {
            self.run(p, &mut vec![0.0; self.depth])
        }
    }

    fn run(&self, p: &[f64], stack: &mut [f64]) -> Result<f64, ExprError> {
        // sp is the number of live slots
        let mut sp = 0;
        for op in &self.ops {
            match *op {
                Op::Const(c) => {
                    stack[sp] = c;
                    sp += 1;
                }
                Op::Var(i) => {
                    stack[sp] = p[i];
                    sp += 1;
                }
                Op::Add => {
                    sp -= 1;
                    stack[sp - 1] += stack[sp];
                }
                Op::Mul => {
                    sp -= 1;
                    stack[sp - 1] *= stack[sp];
                }
                Op::Div(src) => {
                    sp -= 1;
                    let b = stack[sp];
                    if b == 0.0 {
                        return Err(domain(&self.sources[src], "division by zero"));
                    }
                    stack[sp - 1] /= b;
                }
                Op::Neg => stack[sp - 1] = -stack[sp - 1],
                Op::Powi(n) => stack[sp - 1] = stack[sp - 1].powi(n),
                Op::Call(f, src) => {
                    let a = stack[sp - 1];
                    stack[sp - 1] = match f {
                        Func::Exp => a.exp(),
                        Func::Sin => a.sin(),
                        Func::Cos => a.cos(),
                        Func::Sqrt => {
                            if a < 0.0 {
                                return Err(domain(
                                    &self.sources[src],
                                    "square root of a negative number",
                                ));
                            }
                            a.sqrt()
                        }
                    };
                }
            }
        }
        Ok(if sp == 0 { 0.0 } else { stack[sp - 1] })
    }
}
