package com.example.app08;

public class Host {
    private int counter;

    public void onCreate() {
        counter = counter + 8;
        String title = "screen 8";
        System.out.println(title);
    }

    public void configure() {
        SecureRandom random = new SecureRandom();
        byte[] salt = new byte[16];
        random.nextBytes(salt);
    }

    public int compute(int a, int b) {
        int s = a * 10 + b;
        return s;
    }
}
