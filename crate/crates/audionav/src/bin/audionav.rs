fn main() {
    println!("audionav CLI placeholder");
}
