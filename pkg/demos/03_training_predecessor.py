"""Learning the predecessor relation by gradient descent.

Training minimizes cross-entropy between fuzzy valuations and the labeled
examples: positive atoms should reach value 1, negative atoms value 0.
Each step samples a random example batch, runs differentiable inference,
backpropagates through every step and t-norm, and updates the clause-literal
logits with Adam.  When the full-batch loss crosses the early-stop threshold
the run finishes and the argmax clauses are read back out as a program.

Run:  python3 demos/03_training_predecessor.py    (about half a minute)
"""

from gradlog.evaluate import classify_outcome, extract_program, format_program
from gradlog.tasks import compile_task, make_task
from gradlog.train import TrainConfig, train

task = make_task("predecessor")
config = TrainConfig(seed=0, infer_steps=10)
train_problem = compile_task(task, 1, "train")
test_problem = compile_task(task, 1, "test")

print(f"task: {task.name} with 1 invented predicate")
print(f"train: constants 0..10, {train_problem.pos.size} positive / "
      f"{train_problem.neg.size} negative examples")
print(f"test:  constants 0..20, {test_problem.pos.size} positive / "
      f"{test_problem.neg.size} negative examples\n")

result = train(train_problem, config, log=print)

print(f"\nstopped after {result.steps_used} steps ({result.stop_reason}), "
      f"final full-batch loss {result.final_full_loss:.6f}")

program = extract_program(result.weights, train_problem.index)
print("\nextracted program (argmax per literal slot, unused templates trimmed):")
print(format_program(program))

outcome = classify_outcome(result.weights, program, train_problem, test_problem,
                           config.tnorms, config.infer_steps)
print(f"\ncorrectness flags: classical test={outcome.c} fuzzy test={outcome.f} "
      f"classical train={outcome.ct} fuzzy train={outcome.ft}")
print(f"outcome category: {outcome.category}")
print("\nthe program generalizes: it was trained on numbers up to 10 and "
      "classified on numbers up to 20.")
