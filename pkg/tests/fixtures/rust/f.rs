use std::io::{self, Read};
fn main() {
  let mut buf = vec![0; 114514];
  let n = io::stdin().read(&mut buf)
                     .unwrap() - 1;
  println!("{}", if buf[0] == buf[n - 1]
    && n%2==0 {"First"} else {"Second"});
}
