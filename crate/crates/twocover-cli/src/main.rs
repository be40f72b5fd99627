fn main() {
    println!("twocover");
}
