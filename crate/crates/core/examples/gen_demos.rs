//! Roll out the scripted expert, print one episode as ASCII and write a
//! dataset file.
//!
//! cargo run --example gen_demos -- [task] [n] [out.trdm]

use anyhow::Result;
use progress_reward::env::{generate_demos, read_dataset, write_dataset, Dataset, AGENT_CHANNEL, GOAL_CHANNEL, OBJECT_CHANNEL};
use progress_reward::{Frame, GridWorld, Task};

fn ascii(frame: &Frame) -> String {
    let mut s = String::new();
    for r in 0..frame.height() {
        for c in 0..frame.width() {
            s.push(if frame.get(AGENT_CHANNEL, r, c) > 0.0 {
                'A'
            } else if frame.get(OBJECT_CHANNEL, r, c) > 0.0 {
                'o'
            } else if frame.get(GOAL_CHANNEL, r, c) > 0.0 {
                'G'
            } else {
                '.'
            });
        }
        s.push('\n');
    }
    s
}

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let task: Task = args.next().as_deref().unwrap_or("push").parse()?;
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let out = args.next().unwrap_or_else(|| std::env::temp_dir().join("demos.trdm").display().to_string());

    let world = GridWorld::new(task);
    let demos = generate_demos(&world, n, 7)?;
    let lengths: Vec<usize> = demos.iter().map(|t| t.len()).collect();
    println!("{n} {task} demos, lengths {lengths:?}");
    println!("first frame:\n{}", ascii(&demos[0].frames[0]));
    println!("last frame:\n{}", ascii(demos[0].frames.last().expect("non-empty")));

    let dataset = Dataset::new(task, world.height, world.width, demos)?;
    let checksum = write_dataset(out.as_ref(), &dataset)?;
    assert_eq!(read_dataset(out.as_ref())?.to_bytes(), dataset.to_bytes());
    println!("wrote {out} (checksum {checksum:016x})");
    Ok(())
}
