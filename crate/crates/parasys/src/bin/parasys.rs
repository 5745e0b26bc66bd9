fn main() {
    println!("parasys");
}
